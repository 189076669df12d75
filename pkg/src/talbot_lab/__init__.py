"""Divergence sets of the free Schrödinger evolution: exponent algebra, simulation and geometry."""

__version__ = "0.1.0"
