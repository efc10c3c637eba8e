"""Entropic thresholds of repetition, concatenated and stabilizer codes under Pauli noise."""
__version__ = "0.1.0"
