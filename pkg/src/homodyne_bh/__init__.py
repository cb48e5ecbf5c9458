"""Continuously monitored Bose-Hubbard lattices under homodyne detection."""

__version__ = "0.1.0"
