"""Spatial basis impact estimation around soybean crush plants."""

__version__ = "0.1.0"
