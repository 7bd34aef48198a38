# src/wavelet/__init__.py
