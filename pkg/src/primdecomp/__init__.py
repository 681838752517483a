"""Decompose polygonal meshes into enclosing convex primitives."""
__version__ = "0.1.0"
