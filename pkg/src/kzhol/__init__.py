"""Regularized KZ holonomies, crossing factors, and pentagon verification."""

__version__ = "0.1.0"
