"""Numerical laboratory for the critical 2-D heat equation with exponential growth."""
from .nonlinearity import ALPHA, BETA, DEFAULT, Nonlinearity

__all__ = ["ALPHA", "BETA", "DEFAULT", "Nonlinearity"]
__version__ = "0.1.0"
