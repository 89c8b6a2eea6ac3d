"""Sahlqvist and inductive inequalities for distributive lattice expansions: classification,
order-type-parametric translation into Boolean modal logic, frame semantics, and first-order correspondents."""

__version__ = "0.1.0"
