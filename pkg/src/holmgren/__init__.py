"""Flat biharmonic constructions and the exact polynomial machinery around them."""
__version__ = "0.1.0"
