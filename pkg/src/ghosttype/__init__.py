"""Inline text autocomplete as sequential decision-making."""

__version__ = "0.1.0"
