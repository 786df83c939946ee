"""Occupation and hitting measures of 2d-QBD-type nonnegative matrices."""

__version__ = "0.1.0"
