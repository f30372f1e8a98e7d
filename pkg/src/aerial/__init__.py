"""Neurosymbolic association rule mining with a denoising autoencoder (Aerial+)."""

__version__ = "0.1.0"
