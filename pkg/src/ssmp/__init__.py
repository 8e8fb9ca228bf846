"""Simulation and verification of symmetric real-valued self-similar Markov processes."""

__version__ = "0.1.0"
