"""Piecewise convexification for box-constrained multi-objective problems."""

__version__ = "0.1.0"
