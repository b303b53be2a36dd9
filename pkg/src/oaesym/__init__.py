"""Nonlocal symmetries, commuting flows and transformations of the oriented
associativity equations, checked in exact rational arithmetic."""

__version__ = "0.1.0"
