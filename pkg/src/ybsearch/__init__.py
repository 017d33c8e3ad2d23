"""Exact search for spectral-parameter solutions of the Yang-Baxter equation
in the two-qubit case."""

__version__ = "0.1.0"
