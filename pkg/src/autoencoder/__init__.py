# src/autoencoder/__init__.py
