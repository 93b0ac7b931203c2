"""Evolving hierarchy-constrained acyclic VAR(1) models."""

__version__ = "0.1.0"
