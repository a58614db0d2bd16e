"""Numerical toolkit for p-harmonic measures on planar convex rings."""

__version__ = "0.1.0"
