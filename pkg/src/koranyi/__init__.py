"""Potential theory on the Korányi ball of the Heisenberg group."""

__version__ = "0.1.0"
