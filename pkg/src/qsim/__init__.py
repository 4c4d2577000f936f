"""Noisy state-vector simulation of fermionic circuits."""

__version__ = "0.1.0"
