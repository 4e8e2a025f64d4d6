"""Wideband near-field channel estimation for THz extremely large arrays."""

__version__ = "0.1.0"
