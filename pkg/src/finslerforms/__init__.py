"""Numerical Chern-Weil laboratory for holomorphic Finsler vector bundles."""

__version__ = "0.1.0"
