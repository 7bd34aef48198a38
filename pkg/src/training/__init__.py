# src/training/__init__.py
