"""Martingale optimal transport between discrete measures on the line."""

__version__ = "0.1.0"
