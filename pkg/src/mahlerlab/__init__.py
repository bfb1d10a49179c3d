"""Exact modular-unit computations and numerical Mahler-measure verification."""

__version__ = "0.1.0"
