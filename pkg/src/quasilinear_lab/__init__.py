"""Desk-scale numerical laboratory for continuous dependence of quasilinear parabolic problems."""

__version__ = "0.1.0"
