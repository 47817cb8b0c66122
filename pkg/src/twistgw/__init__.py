"""Numerical engine for the twisted Moyal product and the twisted GW scalar model."""

__version__ = "0.1.0"
