"""Primal-dual circle packings of planar triangulations via convex optimisation."""

__version__ = "0.1.0"
