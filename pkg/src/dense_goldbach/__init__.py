"""Computational toolkit for density versions of the binary Goldbach problem."""

__version__ = "0.1.0"
