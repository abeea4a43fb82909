"""Curvature of direct-image bundles, checked numerically against closed forms."""

__version__ = "0.1.0"
