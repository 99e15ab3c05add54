"""Numerical laboratory for truncated q-deformed Araki-Woods data."""

__version__ = "0.1.0"
