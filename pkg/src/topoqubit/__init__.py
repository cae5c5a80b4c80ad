"""Simulation of cavity-coupled two-SQUID devices realizing a row/column protected qubit."""

__version__ = "0.1.0"
