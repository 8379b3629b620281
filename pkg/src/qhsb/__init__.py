"""Quasi-Hermitian spin-boson dynamics with a time-dependent Dyson map."""

__version__ = "0.1.0"
