"""Brick-wall circuit compilation with tensor networks and Riemannian Adam."""

__version__ = "0.1.0"
