"""Optimization by sampling stationary points of a Gaussian derivative-process posterior."""

__version__ = "0.1.0"
