"""Desk-scale simulation of linear quantum networks programmed through a complex medium."""

__version__ = "0.1.0"
