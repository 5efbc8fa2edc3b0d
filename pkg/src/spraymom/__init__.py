"""Fractional size-moment methods for polydisperse evaporating sprays."""

__version__ = "0.1.0"
