"""Theta-constants, modular dynamical systems and their conserved structures."""

__version__ = "0.1.0"
