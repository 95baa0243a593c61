"""Computable invariants around growth of closed orbits on cotangent bundles."""

__version__ = "0.1.0"
