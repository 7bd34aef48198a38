# src/classical/__init__.py
