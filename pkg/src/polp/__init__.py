"""Probabilistic optimizable logic programs: BDD compilation and constrained optimization."""

__version__ = "0.1.0"
