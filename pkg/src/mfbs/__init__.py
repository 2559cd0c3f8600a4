"""Numerical laboratory for multifractional Brownian sheets."""

__version__ = "0.1.0"
