"""Empathy-modified game models: matrix games, auctions, demand response, LQ and finite mean-field games."""

__version__ = "0.1.0"
