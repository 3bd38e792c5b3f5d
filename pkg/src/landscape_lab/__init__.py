"""Numerical audits of loss-landscape claims for over-parameterized networks."""

__version__ = "0.1.0"
