"""Certified construction of stacky curves violating the integral local-global principle."""

__version__ = "0.1.0"
