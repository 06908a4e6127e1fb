"""Hybrid random forest / neural network classification of actigraphy days."""

__version__ = "0.1.0"
