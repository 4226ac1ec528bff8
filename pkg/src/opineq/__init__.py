"""Numerical verification of reverse inequalities for symmetric norms and
operator convex functions."""

__version__ = "0.1.0"
