"""Numerical laboratory for a Carleman-estimate proof of unique continuation
for pseudoholomorphic curves."""

__version__ = "0.1.0"
