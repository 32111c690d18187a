"""Numerical laboratory for transport costs between Lebesgue measure and stationary point processes."""

__version__ = "0.1.0"
