"""Numerical laboratory for Reich sequences on complements of quasilattices."""

__version__ = "0.1.0"
