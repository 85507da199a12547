"""Variational Bayesian regression networks with weight and likelihood-variance uncertainty."""

__version__ = "0.1.0"
