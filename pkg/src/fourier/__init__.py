# src/fourier/__init__.py
