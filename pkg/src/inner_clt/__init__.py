"""Numerical checks of a Berry-Esseen theorem for iterates of inner functions."""

__version__ = "0.1.0"
