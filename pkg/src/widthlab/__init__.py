"""Numerical verification toolkit for a 4-D body of constant width built from
unit balls over part of the 2-skeleton of a regular simplex, and its 3-D shadow."""

__version__ = "0.1.0"
