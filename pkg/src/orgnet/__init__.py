"""Optimal communication structures for organisations."""

__version__ = "0.1.0"
