"""Finite-difference solver for ``Delta u + f(u) = 0`` with zero Dirichlet data."""

from .analysis import (
    BoundaryData,
    ReflectedDifference,
    coefficient_c,
    growth_constants,
    normal_derivative,
    reflect_difference,
    seminorm_unu,
)
from .grid import Grid, discretize
from .io import load_field, save_field, write_boundary_csv
from .solver import Field, NonlinearitySpec, eigen_demo, inverse_iteration, solve_poisson, solve_semilinear

__all__ = [
    "BoundaryData",
    "Field",
    "Grid",
    "NonlinearitySpec",
    "ReflectedDifference",
    "coefficient_c",
    "discretize",
    "eigen_demo",
    "growth_constants",
    "inverse_iteration",
    "load_field",
    "normal_derivative",
    "reflect_difference",
    "save_field",
    "seminorm_unu",
    "solve_poisson",
    "solve_semilinear",
    "write_boundary_csv",
]
