"""Numerical laboratory for the BBM equation in nonlocal form and the Camassa-Holm equation."""

__version__ = "0.1.0"

from .grid import Grid, GridError, GridFunction, Spectrum, make_grid, transform, inverse  # noqa: E402
from .evolution import SolverConfig, Trajectory, evolve, evolve_system  # noqa: E402

__all__ = ["Grid", "GridError", "GridFunction", "Spectrum", "SolverConfig", "Trajectory", "evolve",
           "evolve_system", "inverse", "make_grid", "transform", "__version__"]
