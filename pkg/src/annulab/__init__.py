"""Numerical laboratory for area-preserving and reversible annulus maps."""
