"""Guided modes and band structure of periodically modulated leaky wires."""

__version__ = "0.1.0"
