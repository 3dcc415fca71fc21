"""Shifted-ratio averages and n-level densities for classical compact
groups and for families of quadratic twists."""

__version__ = "0.1.0"
