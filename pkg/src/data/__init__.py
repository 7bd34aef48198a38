# src/data/__init__.py
