# src/prdad/__init__.py
