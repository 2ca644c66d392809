"""Graded radial grids, composite quadrature and finite-difference operators.

Every integral over R^3 of a radial function uses the 4*pi*rho^2 convention; the grid stores
``weights`` for the integral of g(rho) rho^2 d rho and ``plain_weights`` for g(rho) d rho.
"""

from dataclasses import dataclass, field
from typing import Dict, Literal, Tuple

import numpy as np
import scipy.sparse as sp

from ..utils.config import GridSpec, ZoneSpec
from ..utils.errors import GridConfigurationError, UnsupportedOperationError
from ..utils.logger import get_logger

logger = get_logger(__name__)

Parity = Literal["even", "odd", "none"]

# Local interpolation degree of the quadrature rule and derivative stencil width
QUADRATURE_POINTS = 6
STENCIL_POINTS = 7


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Strictly increasing radial nodes with quadrature weights.

    Attributes:
        nodes: Radii rho_i >= 0
        plain_weights: Weights for the integral of g d rho
        weights: Weights for the integral of g rho^2 d rho
        segments: (start, end, law) of each zone
        intervals: Sparse (n-1, n) matrix of per-interval integrals
    """

    nodes: np.ndarray
    plain_weights: np.ndarray
    weights: np.ndarray
    segments: Tuple[Tuple[float, float, str], ...]
    intervals: sp.csr_matrix
    _operators: Dict[tuple, sp.csr_matrix] = field(default_factory=dict, repr=False)

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    @property
    def r_max(self) -> float:
        return float(self.nodes[-1])

    @property
    def has_origin(self) -> bool:
        return bool(self.nodes[0] == 0.0)

    def integrate(self, values: np.ndarray) -> complex:
        """Integral of values(rho) rho^2 d rho over the grid."""
        return complex(np.dot(self.weights, values))

    def integrate_plain(self, values: np.ndarray) -> complex:
        """Integral of values(rho) d rho over the grid."""
        return complex(np.dot(self.plain_weights, values))

    def cumulative(self, values: np.ndarray) -> np.ndarray:
        """Running integral from the first node, one entry per node."""
        pieces = self.intervals @ np.asarray(values)
        out = np.zeros(self.size, dtype=np.result_type(pieces, float))
        out[1:] = np.cumsum(pieces)
        return out

    def derivative_matrix(self, order: int, parity: Parity = "none") -> sp.csr_matrix:
        """Sparse 7-point differentiation matrix.

        Args:
            order: 1 or 2
            parity: Symmetry at rho = 0 used to close stencils with ghost nodes

        Raises:
            UnsupportedOperationError: For orders outside {1, 2}
        """
        if order not in (1, 2):
            raise UnsupportedOperationError(f"derivative order {order} is not supported")
        key = ("d", order, parity if self.has_origin else "none")
        if key not in self._operators:
            self._operators[key] = _derivative_matrix(self.nodes, order, key[2])
        return self._operators[key]

    def laplacian_matrix(self, parity: Parity = "even") -> sp.csr_matrix:
        """Radial Laplacian d^2 + (2/rho) d, with 3 d^2 at the origin."""
        key = ("lap", parity if self.has_origin else "none")
        if key not in self._operators:
            d1 = self.derivative_matrix(1, parity)
            d2 = self.derivative_matrix(2, parity)
            inv = np.zeros(self.size)
            inside = self.nodes > 0.0
            inv[inside] = 2.0 / self.nodes[inside]
            lap = (d2 + sp.diags(inv) @ d1).tolil()
            if self.has_origin:
                lap[0, :] = 3.0 * d2[0, :].toarray()
            self._operators[key] = lap.tocsr()
        return self._operators[key]

    def mask(self, window: Tuple[float, float] | None) -> np.ndarray:
        """Boolean mask of nodes inside a closed radial window."""
        if window is None:
            return np.ones(self.size, dtype=bool)
        lo, hi = window
        return (self.nodes >= lo) & (self.nodes <= hi)


def _zone_nodes(zone: ZoneSpec) -> np.ndarray:
    if zone.law == "uniform":
        return np.linspace(zone.start, zone.end, zone.count)
    if zone.law == "geometric":
        return np.geomspace(zone.start, zone.end, zone.count)
    theta = np.linspace(0.0, np.pi, zone.count)
    return zone.start + 0.5 * (zone.end - zone.start) * (1.0 - np.cos(theta))


def _check_zones(zones: list[ZoneSpec]) -> None:
    for left, right in zip(zones[:-1], zones[1:]):
        scale = max(1.0, abs(left.end))
        if right.start > left.end + 1e-12 * scale:
            raise GridConfigurationError(
                "grid zones leave a gap",
                {"end": left.end, "next_start": right.start},
            )
        if right.start < left.end - 1e-12 * scale:
            raise GridConfigurationError(
                "grid zones overlap",
                {"end": left.end, "next_start": right.start},
            )


def _interval_matrix(nodes: np.ndarray) -> sp.csr_matrix:
    """Exact integrals of the local degree-5 interpolant over each interval."""
    n = nodes.size
    powers = np.arange(QUADRATURE_POINTS)
    moments = (1.0 - (-1.0) ** (powers + 1)) / (powers + 1)
    rows, cols, vals = [], [], []
    for i in range(n - 1):
        lo = min(max(i - 2, 0), n - QUADRATURE_POINTS)
        idx = np.arange(lo, lo + QUADRATURE_POINTS)
        centre = 0.5 * (nodes[i] + nodes[i + 1])
        half = 0.5 * (nodes[i + 1] - nodes[i])
        local = (nodes[idx] - centre) / half
        vander = local[None, :] ** powers[:, None]
        w = half * np.linalg.solve(vander, moments)
        rows.extend([i] * QUADRATURE_POINTS)
        cols.extend(idx.tolist())
        vals.extend(w.tolist())
    return sp.csr_matrix((vals, (rows, cols)), shape=(n - 1, n))


def fornberg_weights(x0: float, x: np.ndarray, order: int) -> np.ndarray:
    """Finite-difference weights for derivatives 0..order at x0 on arbitrary nodes.

    Returns:
        Array of shape (order + 1, len(x))
    """
    n = x.size
    c = np.zeros((order + 1, n))
    c1 = 1.0
    c4 = x[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k, i] = c1 * (k * c[k - 1, i - 1] - c5 * c[k, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for k in range(mn, 0, -1):
                c[k, j] = (c4 * c[k, j] - k * c[k - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3
        c1 = c2
    return c


def _derivative_matrix(nodes: np.ndarray, order: int, parity: Parity) -> sp.csr_matrix:
    n = nodes.size
    half = STENCIL_POINTS // 2
    if parity in ("even", "odd"):
        sign = 1.0 if parity == "even" else -1.0
        ext = np.concatenate([-nodes[half:0:-1], nodes])
        owner = np.concatenate([np.arange(half, 0, -1), np.arange(n)])
        factor = np.concatenate([np.full(half, sign), np.ones(n)])
        offset = half
    else:
        ext, owner, factor, offset = nodes, np.arange(n), np.ones(n), 0
    m = ext.size
    rows, cols, vals = [], [], []
    for i in range(n):
        e = i + offset
        lo = min(max(e - half, 0), m - STENCIL_POINTS)
        idx = np.arange(lo, lo + STENCIL_POINTS)
        w = fornberg_weights(ext[e], ext[idx], order)[order]
        rows.extend([i] * STENCIL_POINTS)
        cols.extend(owner[idx].tolist())
        vals.extend((w * factor[idx]).tolist())
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def make_grid(config: GridSpec) -> RadialGrid:
    """Build a radial grid from contiguous zones.

    Args:
        config: Zone list

    Returns:
        Grid with composite interpolatory quadrature weights

    Raises:
        GridConfigurationError: On overlapping or gapped zones or too few nodes
    """
    zones = list(config.zones)
    _check_zones(zones)

    pieces = [_zone_nodes(zones[0])]
    for zone in zones[1:]:
        pieces.append(_zone_nodes(zone)[1:])
    nodes = np.concatenate(pieces)
    if nodes.size < STENCIL_POINTS:
        raise GridConfigurationError("grid needs at least 7 nodes", {"nodes": int(nodes.size)})
    if np.any(np.diff(nodes) <= 0.0):
        raise GridConfigurationError("grid nodes are not strictly increasing")

    intervals = _interval_matrix(nodes)
    plain = np.asarray(intervals.sum(axis=0)).ravel()
    weights = plain * nodes**2
    if np.any(plain <= 0.0):
        logger.warning("quadrature_weights_not_positive", count=int(np.sum(plain <= 0.0)))

    grid = RadialGrid(
        nodes=nodes,
        plain_weights=plain,
        weights=weights,
        segments=tuple((z.start, z.end, z.law) for z in zones),
        intervals=intervals,
    )
    logger.debug("grid_built", nodes=grid.size, r_max=grid.r_max, zones=len(zones))
    return grid


def uniform_line(count: int, step: float) -> np.ndarray:
    """Interior nodes rho_j = j*step, j = 1..count, of a reduced-variable line grid."""
    return step * np.arange(1, count + 1)


# Centered 7-point coefficients on a uniform line
_SECOND = np.array([-49.0 / 18.0, 1.5, -3.0 / 20.0, 1.0 / 90.0])
_FIRST = np.array([0.0, 0.75, -3.0 / 20.0, 1.0 / 60.0])


def _line_operator(
    count: int, step: float, coeffs: np.ndarray, odd_stencil: bool, far: str
) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    for i in range(1, count + 1):
        for m in range(-3, 4):
            c = coeffs[abs(m)] * (np.sign(m) if odd_stencil else 1.0)
            if c == 0.0:
                continue
            j = i + m
            if 1 <= j <= count:
                target, value = j, c
            elif j == 0:
                continue
            elif j < 0:
                # odd reflection at the origin, phi(-rho) = -phi(rho)
                target, value = -j, -c
            elif far == "dirichlet":
                if j == count + 1:
                    continue
                target, value = 2 * count + 2 - j, -c
            else:
                # even reflection about the half node beyond the last point
                target, value = 2 * count + 1 - j, c
            rows.append(i - 1)
            cols.append(target - 1)
            vals.append(value)
    scale = step ** (2 if not odd_stencil else 1)
    return sp.csr_matrix((np.array(vals) / scale, (rows, cols)), shape=(count, count))


def line_second_difference(count: int, step: float, far: str = "neumann") -> sp.csr_matrix:
    """Symmetric 7-point d^2/d rho^2 for phi = rho*f on nodes j*step, j = 1..count.

    Args:
        count: Number of interior nodes
        step: Uniform spacing
        far: ``neumann`` (half-node even reflection) or ``dirichlet`` (phi = 0 one node out)
    """
    if far not in ("neumann", "dirichlet"):
        raise UnsupportedOperationError(f"unknown far boundary {far!r}")
    return _line_operator(count, step, _SECOND, odd_stencil=False, far=far)


def line_first_difference(count: int, step: float, far: str = "neumann") -> sp.csr_matrix:
    """Centered 7-point d/d rho for phi = rho*f with the same reflections."""
    if far not in ("neumann", "dirichlet"):
        raise UnsupportedOperationError(f"unknown far boundary {far!r}")
    return _line_operator(count, step, _FIRST, odd_stencil=True, far=far)


def origin_value(phi: np.ndarray, step: float) -> complex:
    """f(0) recovered from phi = rho*f on a uniform line (one-sided odd extrapolation)."""
    return (1.5 * phi[0] - 0.3 * phi[1] + phi[2] / 30.0) / step
