"""Finite-volume solver and analysis toolkit for a 2D chemotaxis-fluid model with singular sensitivity."""

from .grid import BC, Forcing, Grid, Params, ScalarField, SimState, VectorField, integrate, make_grid

__all__ = ["BC", "Forcing", "Grid", "Params", "ScalarField", "SimState", "VectorField", "integrate", "make_grid"]
