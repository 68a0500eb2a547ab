"""Finite-dimensional matrix-ordered operator spaces: Choi/trace duality, matrix gauges,
Bonsall-type extension and matrix convex separation with checkable certificates."""

__version__ = "0.1.0"
