"""Numerical toolkit for radial-weight Bergman spaces on the unit disk."""

__version__ = "0.1.0"
