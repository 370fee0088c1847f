"""Warped Cone Stability - eigenvalue criterion for minimal truncated cones in warped products."""

__version__ = "0.1.0"
