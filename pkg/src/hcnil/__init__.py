"""Exact and Monte Carlo checks of the nilpotent Gaussian form of Harish-Chandra integrals."""

__version__ = "0.1.0"
