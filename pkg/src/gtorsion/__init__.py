"""Intrinsic torsion of almost-product structures and the geometry of the orthonormal frame bundle."""

__version__ = "0.1.0"
