"""Quantum channel spectra, fixed-point structure and entanglement-saving classification."""

__version__ = "0.1.0"
