"""Exact solutions, transformations, reductions and evolvers for curve shortening and anisotropic evaporation-condensation flows."""

__version__ = "0.1.0"
