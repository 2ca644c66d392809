"""Complex radial fields, spinors and the norms used by every estimate."""

from dataclasses import dataclass
from typing import Literal, Optional, Tuple, Union

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from ..utils.errors import ConfigurationError, DomainError, NumericError, UnsupportedOperationError
from .grid import Parity, RadialGrid

NormKind = Literal["L2", "Hdot1", "Hdot2", "H1", "H2", "SupWeighted"]
Scalar = Union[int, float, complex]

_FLIP = {"even": "odd", "odd": "even", "none": "none"}


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Complex samples of a radial function on a grid.

    Attributes:
        grid: Sampling grid
        values: One complex value per node
        parity: Behavior at rho = 0, used to close derivative stencils
    """

    grid: RadialGrid
    values: np.ndarray
    parity: Parity = "even"

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=complex)
        if values.shape != (self.grid.size,):
            raise ConfigurationError(
                "field length does not match grid",
                {"values": values.shape, "nodes": self.grid.size},
            )
        if self.parity == "odd" and self.grid.has_origin:
            scale = max(1.0, float(np.max(np.abs(values))) if values.size else 1.0)
            if abs(values[0]) > 1e-10 * scale:
                raise ConfigurationError(
                    "odd field must vanish at the origin", {"value": float(abs(values[0]))}
                )
            values[0] = 0.0
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid: RadialGrid, func, parity: Parity = "even") -> "ComplexField":
        return cls(grid, func(grid.nodes), parity)

    @classmethod
    def zeros(cls, grid: RadialGrid, parity: Parity = "even") -> "ComplexField":
        return cls(grid, np.zeros(grid.size, dtype=complex), parity)

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    def with_values(self, values: np.ndarray, parity: Optional[Parity] = None) -> "ComplexField":
        return ComplexField(self.grid, values, parity or self.parity)

    def derivative(self, order: int = 1) -> "ComplexField":
        return radial_derivative(self, order)

    def laplacian(self) -> "ComplexField":
        return ComplexField(
            self.grid, self.grid.laplacian_matrix(self.parity) @ self.values, self.parity
        )

    def conj(self) -> "ComplexField":
        return self.with_values(np.conj(self.values))

    def abs2(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def sup(self, window: Optional[Tuple[float, float]] = None) -> float:
        mask = self.grid.mask(window)
        return float(np.max(np.abs(self.values[mask]))) if np.any(mask) else 0.0

    def interpolate(self, radii: np.ndarray) -> np.ndarray:
        """Cubic Hermite interpolation of real and imaginary parts.

        Raises:
            DomainError: For radii outside the grid
        """
        radii = np.asarray(radii, dtype=float)
        outside = radii.size and (
            radii.min() < self.nodes[0] - 1e-12 or radii.max() > self.nodes[-1] + 1e-9
        )
        if outside:
            raise DomainError(
                "interpolation outside the grid",
                {"min": float(radii.min()), "max": float(radii.max()), "r_max": self.grid.r_max},
            )
        slope = self.derivative(1).values
        spline_re = CubicHermiteSpline(self.nodes, self.values.real, slope.real)
        spline_im = CubicHermiteSpline(self.nodes, self.values.imag, slope.imag)
        return spline_re(radii) + 1j * spline_im(radii)

    def _check(self, other: "ComplexField") -> None:
        if other.grid is not self.grid:
            raise ConfigurationError("fields live on different grids")

    def __add__(self, other: Union["ComplexField", Scalar]) -> "ComplexField":
        if isinstance(other, ComplexField):
            self._check(other)
            parity = self.parity if self.parity == other.parity else "none"
            return ComplexField(self.grid, self.values + other.values, parity)
        parity = "even" if self.parity == "even" else "none"
        return ComplexField(self.grid, self.values + other, parity)

    __radd__ = __add__

    def __sub__(self, other: Union["ComplexField", Scalar]) -> "ComplexField":
        return self + (-other if not isinstance(other, ComplexField) else other * -1.0)

    def __neg__(self) -> "ComplexField":
        return self * -1.0

    def __mul__(self, other: Union["ComplexField", Scalar, np.ndarray]) -> "ComplexField":
        if isinstance(other, ComplexField):
            self._check(other)
            if "none" in (self.parity, other.parity):
                parity: Parity = "none"
            else:
                parity = "even" if self.parity == other.parity else "odd"
            return ComplexField(self.grid, self.values * other.values, parity)
        if isinstance(other, np.ndarray):
            return ComplexField(self.grid, self.values * other, "none")
        return ComplexField(self.grid, self.values * other, self.parity)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class SpinorField:
    """Two-component radial field (f, f-bar slot) for the matrix linearization.

    Attributes:
        up: First component
        down: Second component
        conjugate_symmetric: When set, ``down`` must equal ``conj(up)``
    """

    up: ComplexField
    down: ComplexField
    conjugate_symmetric: bool = False

    def __post_init__(self) -> None:
        if self.up.grid is not self.down.grid:
            raise ConfigurationError("spinor components live on different grids")
        if self.conjugate_symmetric:
            gap = np.max(np.abs(self.down.values - np.conj(self.up.values)), initial=0.0)
            scale = max(1.0, float(np.max(np.abs(self.up.values), initial=0.0)))
            if gap > 1e-10 * scale:
                raise ConfigurationError("spinor is not conjugate symmetric", {"gap": float(gap)})

    @classmethod
    def from_scalar(cls, f: ComplexField) -> "SpinorField":
        return cls(f, f.conj(), conjugate_symmetric=True)

    @property
    def grid(self) -> RadialGrid:
        return self.up.grid

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.up.values, self.down.values])

    def sigma1(self) -> "SpinorField":
        return SpinorField(self.down, self.up, self.conjugate_symmetric)

    def sigma3(self) -> "SpinorField":
        return SpinorField(self.up, -self.down)

    def conj(self) -> "SpinorField":
        return SpinorField(self.up.conj(), self.down.conj(), self.conjugate_symmetric)

    def inner(self, other: "SpinorField") -> complex:
        """L^2(R^3, C^2) scalar product, linear in the first slot."""
        w = 4.0 * np.pi * self.grid.weights
        return complex(
            np.sum(w * (self.up.values * np.conj(other.up.values)))
            + np.sum(w * (self.down.values * np.conj(other.down.values)))
        )


def radial_derivative(f: ComplexField, order: int) -> ComplexField:
    """High-order finite-difference derivative; parity closes the stencil at rho = 0.

    Raises:
        UnsupportedOperationError: For orders outside {1, 2}
    """
    if order not in (1, 2):
        raise UnsupportedOperationError(f"derivative order {order} is not supported")
    matrix = f.grid.derivative_matrix(order, f.parity)
    parity = _FLIP[f.parity] if order == 1 else f.parity
    return ComplexField(f.grid, matrix @ f.values, parity)


def _finite(f: ComplexField) -> None:
    if not np.all(np.isfinite(f.values)):
        bad = int(np.sum(~np.isfinite(f.values)))
        raise NumericError("field has non-finite samples", {"bad": bad})


def _l2_sq(values: np.ndarray, grid: RadialGrid, mask: np.ndarray) -> float:
    return float(4.0 * np.pi * np.sum(grid.weights[mask] * np.abs(values[mask]) ** 2))


def norm(
    f: ComplexField,
    kind: NormKind = "L2",
    exponent: float = 0.0,
    window: Optional[Tuple[float, float]] = None,
) -> float:
    """Radial norms of a field.

    Args:
        f: Field to measure
        kind: L2, Hdot1, Hdot2, H1, H2 or SupWeighted
        exponent: Weight exponent a of SupWeighted, sup |f| <rho>^{-a}
        window: Optional radial window restricting the measure

    Returns:
        Non-negative norm value

    Raises:
        NumericError: On non-finite samples
        UnsupportedOperationError: On an unknown kind
    """
    _finite(f)
    mask = f.grid.mask(window)
    if kind == "SupWeighted":
        bracket = np.sqrt(1.0 + f.nodes[mask] ** 2)
        return float(np.max(np.abs(f.values[mask]) * bracket ** (-exponent), initial=0.0))

    parts = {"L2": (0,), "Hdot1": (1,), "Hdot2": (2,), "H1": (0, 1), "H2": (0, 1, 2)}
    if kind not in parts:
        raise UnsupportedOperationError(f"unknown norm kind {kind!r}")
    total = 0.0
    for level in parts[kind]:
        if level == 0:
            total += _l2_sq(f.values, f.grid, mask)
        elif level == 1:
            total += _l2_sq(radial_derivative(f, 1).values, f.grid, mask)
        else:
            total += _l2_sq(f.laplacian().values, f.grid, mask)
    return float(np.sqrt(total))


def weighted_profile(f: ComplexField, power: int, derivative: int) -> np.ndarray:
    """Samples of rho^{-power} d^derivative f, with the origin sample set to zero when singular."""
    current = f
    for _ in range(derivative):
        current = radial_derivative(current, 1)
    values = current.values
    if power == 0:
        return values
    out = np.zeros_like(values)
    inside = f.nodes > 0.0
    out[inside] = values[inside] * f.nodes[inside] ** (-power)
    return out


def weighted_norm(
    f: ComplexField,
    power: int,
    derivative: int,
    window: Optional[Tuple[float, float]] = None,
    kind: Literal["L2", "sup"] = "L2",
) -> float:
    """||rho^{-power} d^derivative f|| in L^2(rho^2 d rho) or sup over a window."""
    _finite(f)
    values = weighted_profile(f, power, derivative)
    mask = f.grid.mask(window)
    if kind == "sup":
        return float(np.max(np.abs(values[mask]), initial=0.0))
    return float(np.sqrt(np.sum(f.grid.weights[mask] * np.abs(values[mask]) ** 2)))


def log_slope(x, y) -> float:
    """Least-squares slope of ln|y| against ln x; nan when some |y| vanishes."""
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y))
    if x.size < 2 or np.any(y <= 0.0) or np.any(x <= 0.0):
        return float("nan")
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)
