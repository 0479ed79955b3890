"""Semistability, optimal destabilizers, strata and moment polyhedra for V x P(E)."""

__version__ = "0.1.0"
