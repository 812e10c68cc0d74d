"""Causal autoencoder node-importance ranking."""

__version__ = "0.1.0"
