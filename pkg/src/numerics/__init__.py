"""Radial grids, fields, quadrature and norms."""

from .fields import (
    ComplexField,
    SpinorField,
    log_slope,
    norm,
    radial_derivative,
    weighted_norm,
)
from .grid import RadialGrid, make_grid

__all__ = [
    "ComplexField",
    "SpinorField",
    "RadialGrid",
    "log_slope",
    "make_grid",
    "norm",
    "radial_derivative",
    "weighted_norm",
]
