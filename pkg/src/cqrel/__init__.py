"""Reliability-function bounds for classical-quantum channels."""
__version__ = "0.1.0"
