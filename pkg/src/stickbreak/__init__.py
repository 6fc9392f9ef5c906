"""Stick-breaking simulation of Lévy extrema with MC, multilevel and unbiased estimators."""

__version__ = "0.1.0"
