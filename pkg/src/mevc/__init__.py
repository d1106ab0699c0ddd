"""Exact MEV of small contract systems, with executable checks for each claim."""

__version__ = "0.1.0"
