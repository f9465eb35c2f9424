"""Uniformly convex sets and their images under C^{1,1} maps."""

__version__ = "0.1.0"
