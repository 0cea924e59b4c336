"""Workbench for four-term progressions in Z/pZ: Gowers norms, Bohr sets, factors,
energy increments, linearisation and lattice recurrence."""

__version__ = "0.1.0"
