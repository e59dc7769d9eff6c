"""Simulator for measurement-based entanglement with parallel charge qubits."""

__version__ = "0.1.0"
