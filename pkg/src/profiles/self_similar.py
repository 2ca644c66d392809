"""Self-similar profiles A_{0,0}, A_{1,0}, A_{2,1}, A_{2,0} of the intermediate region.

All profiles solve (L + mu) f = F with L = -d^2 - (2/y) d + (i/2)(1/2 + y d) in y = |x|/sqrt(t).
Near y = 0 they are evaluated from convergent power series, on [y_series, y_asym] from
DOP853 continuations, and beyond from the asymptotic basis

    M1 = y^p sum c_m y^{-2m},                p = -1/2 + 2i mu,
    M2 = e^{iy^2/4} y^q sum e_m y^{-2m},      q = -5/2 - 2i mu.
"""

from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from ..numerics.fields import ComplexField, radial_derivative, weighted_norm
from ..numerics.grid import RadialGrid, make_grid
from ..utils.config import GridSpec, Params, SelfSimilarConfig, ZoneSpec
from ..utils.errors import (
    BranchSelectionError,
    DependencyError,
    DomainError,
    MatchingError,
    StiffnessError,
)
from ..utils.logger import get_logger
from .ground_state import GroundStateKernel
from .inner import InnerSeries, quintic_coefficients

logger = get_logger(__name__)

ORIGIN_DEPTH = 40
ASYMPTOTIC_TERMS = 40
PRODUCT_TERMS = 12

Label = Tuple[int, int]
Forcing = Callable[[np.ndarray], np.ndarray]


def mu_index(params: Params, n: int) -> complex:
    """mu_n = alpha0 + (i/4)(2n+1)(1+2nu)."""
    return params.alpha0 + 0.25j * (2 * n + 1) * (1.0 + 2.0 * params.nu)


def origin_coefficients(mu: complex, which: str, depth: int = ORIGIN_DEPTH) -> np.ndarray:
    """Taylor coefficients of e2 (powers y^{2m}) or e1 (powers y^{2m-1})."""
    coeffs = np.zeros(depth, dtype=complex)
    coeffs[0] = 1.0
    for m in range(depth - 1):
        if which == "e2":
            coeffs[m + 1] = (mu + 0.25j + 1j * m) * coeffs[m] / ((2 * m + 2) * (2 * m + 3))
        else:
            coeffs[m + 1] = (mu - 0.25j + 1j * m) * coeffs[m] / ((2 * m + 1) * (2 * m + 2))
    return coeffs


def _odd_series(coeffs: np.ndarray, y: np.ndarray, offset: int) -> Tuple[np.ndarray, np.ndarray]:
    """sum c_m y^{2m+offset} and its derivative."""
    powers = 2 * np.arange(coeffs.size) + offset
    basis = y[:, None] ** powers[None, :]
    value = basis @ coeffs
    slope = (basis / y[:, None]) @ (coeffs * powers)
    return value, slope


def origin_series(
    mu: complex,
    which: str,
    y,
    depth: int = ORIGIN_DEPTH,
    y_series: float = 1.0,
    with_slope: bool = False,
):
    """Evaluate e1 (head 1/y) or e2 (head 1) of (L + mu) f = 0 from the origin series.

    Args:
        mu: Spectral index
        which: ``e1`` or ``e2``
        y: Radius or array of radii in (0, y_series] (y = 0 is allowed for e2)
        depth: Number of series terms
        y_series: Largest radius at which the series is trusted
        with_slope: Also return the derivative

    Raises:
        DomainError: Beyond the series radius or at y = 0 for e1
    """
    yy = np.atleast_1d(np.asarray(y, dtype=float))
    if np.any(yy > y_series * (1.0 + 1e-12)) or np.any(yy < 0.0):
        raise DomainError(
            "origin series evaluated outside its radius",
            {"max": float(yy.max()), "y_series": y_series},
        )
    if which == "e1" and np.any(yy == 0.0):
        raise DomainError("e1 is singular at y = 0")
    coeffs = origin_coefficients(mu, which, depth)
    if which == "e2":
        safe = np.where(yy == 0.0, 1.0, yy)
        value, slope = _odd_series(coeffs, safe, 0)
        value = np.where(yy == 0.0, 1.0, value)
        slope = np.where(yy == 0.0, 0.0, slope)
    else:
        value, slope = _odd_series(coeffs, yy, -1)
    if np.ndim(y) == 0:
        value, slope = complex(value[0]), complex(slope[0])
    return (value, slope) if with_slope else value


@dataclass(frozen=True)
class OscillatoryTerm:
    """e^{i branch y^2/4} y^exponent sum_m coeffs[m] y^{-2m}."""

    branch: int
    exponent: complex
    coeffs: np.ndarray

    def evaluate(self, y: np.ndarray, tol: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
        y = np.asarray(y, dtype=float)
        powers = self.exponent - 2.0 * np.arange(self.coeffs.size)
        terms = self.coeffs[None, :] * y[:, None] ** powers[None, :]
        if tol > 0.0:
            magnitude = np.abs(terms)
            head = np.maximum(magnitude[:, :1], 1e-300)
            stop = magnitude < tol * head
            # keep terms up to and including the first one below tolerance
            keep = np.cumsum(np.cumsum(stop, axis=1), axis=1) <= 1
            terms = np.where(keep, terms, 0.0)
        else:
            keep = np.ones_like(terms, dtype=bool)
        phase = np.exp(0.25j * self.branch * y**2)
        value = phase * terms.sum(axis=1)
        slope_terms = np.where(keep, terms * powers[None, :] / y[:, None], 0.0)
        slope = phase * (slope_terms.sum(axis=1) + 0.5j * self.branch * y * terms.sum(axis=1))
        return value, slope

    def scaled(self, factor: complex) -> "OscillatoryTerm":
        return OscillatoryTerm(self.branch, self.exponent, factor * self.coeffs)

    def conj(self) -> "OscillatoryTerm":
        return OscillatoryTerm(-self.branch, np.conj(self.exponent), np.conj(self.coeffs))

    def times(self, other: "OscillatoryTerm", terms: int = PRODUCT_TERMS) -> "OscillatoryTerm":
        a, b = self.coeffs[:terms], other.coeffs[:terms]
        coeffs = np.convolve(a, b)[:terms]
        return OscillatoryTerm(self.branch + other.branch, self.exponent + other.exponent, coeffs)


def asymptotic_term(mu: complex, which: str, terms: int = ASYMPTOTIC_TERMS) -> OscillatoryTerm:
    """Asymptotic series of M1 (branch 0) or M2 (branch 1)."""
    coeffs = np.zeros(terms, dtype=complex)
    coeffs[0] = 1.0
    if which == "M1":
        p = -0.5 + 2j * mu
        for m in range(1, terms):
            coeffs[m] = 1j * coeffs[m - 1] * (p - 2 * m + 2) * (p - 2 * m + 3) / m
        return OscillatoryTerm(0, p, coeffs)
    q = -2.5 - 2j * mu
    for m in range(1, terms):
        coeffs[m] = -1j * coeffs[m - 1] * (q - 2 * m + 2) * (q - 2 * m + 3) / m
    return OscillatoryTerm(1, q, coeffs)


def asymptotic_series(mu: complex, which: str, y, tol: float = 1e-9):
    """M1 or M2 and derivative from the truncated asymptotic series.

    Raises:
        DomainError: When the series has not reached ``tol`` before its terms start to grow
    """
    yy = np.atleast_1d(np.asarray(y, dtype=float))
    term = asymptotic_term(mu, which)
    powers = -2.0 * np.arange(term.coeffs.size)
    magnitude = np.abs(term.coeffs)[None, :] * yy.min() ** powers[None, :]
    smallest = int(np.argmin(magnitude[0]))
    if magnitude[0, smallest] > tol * magnitude[0, 0]:
        raise DomainError(
            "asymptotic series does not reach tolerance at this radius",
            {"y": float(yy.min()), "best": float(magnitude[0, smallest] / magnitude[0, 0])},
        )
    value, slope = term.evaluate(yy, tol)
    if np.ndim(y) == 0:
        return complex(value[0]), complex(slope[0])
    return value, slope


def normalized_wronskian(f, df, g, dg, y) -> np.ndarray:
    """y^2 e^{-iy^2/4} (f g' - f' g), constant in y for two solutions of (L + mu) f = 0."""
    y = np.asarray(y, dtype=float)
    return y**2 * np.exp(-0.25j * y**2) * (f * dg - df * g)


def _integrate(
    mu: complex,
    init: Tuple[complex, complex],
    y_range: Tuple[float, float],
    forcing: Optional[Forcing],
    config: SelfSimilarConfig,
):
    y0, y1 = y_range
    if y0 <= 0.0 or y1 <= 0.0:
        raise DomainError("continuation needs y > 0", {"range": [y0, y1]})

    def rhs(y, state):
        f, df = state
        source = forcing(np.array([y]))[0] if forcing is not None else 0.0
        return [df, -(2.0 / y - 0.5j * y) * df + (0.25j + mu) * f - source]

    result = solve_ivp(
        rhs,
        (y0, y1),
        np.asarray(init, dtype=complex),
        method="DOP853",
        rtol=config.rtol,
        atol=config.atol,
        dense_output=True,
    )
    if not result.success:
        raise StiffnessError(
            f"continuation failed: {result.message}", {"mu": str(mu), "range": [y0, y1]}
        )
    return result.sol


def y_grid(y_min: float, y_max: float, samples: int) -> RadialGrid:
    """Geometric sampling grid in y, without the origin."""
    return make_grid(
        GridSpec(zones=[ZoneSpec(start=y_min, end=y_max, count=samples, law="geometric")])
    )


def continue_ode(
    mu: complex,
    init: Tuple[complex, complex],
    y_range: Tuple[float, float],
    forcing: Optional[Forcing] = None,
    config: Optional[SelfSimilarConfig] = None,
    samples: int = 801,
) -> ComplexField:
    """Continue (L + mu) f = forcing from (f, f') at y_range[0] to y_range[1].

    Args:
        mu: Spectral index
        init: Value and derivative at the starting radius
        y_range: (y0, y1), either direction, both positive
        forcing: Optional callable F(y)
        config: Integrator tolerances
        samples: Number of geometric output samples

    Returns:
        Samples on a geometric grid spanning the range

    Raises:
        StiffnessError: When the integrator fails
    """
    config = config or SelfSimilarConfig()
    dense = _integrate(mu, init, y_range, forcing, config)
    grid = y_grid(min(y_range), max(y_range), samples)
    return ComplexField(grid, dense(grid.nodes)[0], "none")


@dataclass(frozen=True, eq=False)
class SSBasis:
    """Fundamental solutions of (L + mu) f = 0 evaluable on the whole half line.

    ``connection[j]`` holds the coefficients of e_{j+1} on (M1, M2).
    """

    mu: complex
    config: SelfSimilarConfig
    e_dense: Tuple[object, object]
    m_dense: Tuple[object, object]
    connection: np.ndarray
    wronskian_drift: float

    @classmethod
    def build(cls, mu: complex, config: SelfSimilarConfig) -> "SSBasis":
        ys, ya = config.y_series, config.y_asym
        e_dense = tuple(
            _integrate(
                mu,
                origin_series(mu, name, ys, y_series=ys, with_slope=True),
                (ys, config.y_max),
                None,
                config,
            )
            for name in ("e1", "e2")
        )
        m_dense = tuple(
            _integrate(
                mu, asymptotic_series(mu, name, ya, config.series_tol), (ya, ys), None, config
            )
            for name in ("M1", "M2")
        )
        connection = np.array(
            [_connect(*e_dense[j](config.y_match), mu, config.y_match, config) for j in range(2)]
        )
        probe = np.geomspace(ys, ya, 25)
        m1, m2 = m_dense[0](probe), m_dense[1](probe)
        w = normalized_wronskian(m1[0], m1[1], m2[0], m2[1], probe)
        drift = float(np.max(np.abs(w - 0.5j)) / 0.5)
        logger.debug("ss_basis_built", mu=str(mu), wronskian_drift=drift)
        return cls(mu, config, e_dense, m_dense, connection, drift)

    def evaluate(self, name: str, y) -> Tuple[np.ndarray, np.ndarray]:
        """Value and derivative of e1, e2, M1 or M2 at radii y > 0."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        cfg = self.config
        value = np.zeros(y.size, dtype=complex)
        slope = np.zeros(y.size, dtype=complex)
        low = y <= cfg.y_series
        high = y >= cfg.y_asym
        mid = ~low & ~high
        if name in ("e1", "e2"):
            j = 0 if name == "e1" else 1
            if np.any(low):
                value[low], slope[low] = origin_series(
                    self.mu, name, y[low], y_series=cfg.y_series, with_slope=True
                )
            if np.any(mid):
                value[mid], slope[mid] = self.e_dense[j](y[mid])
            if np.any(high):
                for i, basis in enumerate(("M1", "M2")):
                    v, s = asymptotic_series(self.mu, basis, y[high], cfg.series_tol)
                    value[high] += self.connection[j, i] * v
                    slope[high] += self.connection[j, i] * s
            return value, slope
        i = 0 if name == "M1" else 1
        if np.any(high):
            value[high], slope[high] = asymptotic_series(self.mu, name, y[high], cfg.series_tol)
        if np.any(mid):
            value[mid], slope[mid] = self.m_dense[i](y[mid])
        if np.any(low):
            inverse = np.linalg.inv(self.connection)
            for j, basis in enumerate(("e1", "e2")):
                v, s = origin_series(self.mu, basis, y[low], y_series=cfg.y_series, with_slope=True)
                value[low] += inverse[i, j] * v
                slope[low] += inverse[i, j] * s
        return value, slope


def _connect(
    value: complex,
    slope: complex,
    mu: complex,
    y: float,
    config: SelfSimilarConfig,
    method: str = "matrix",
) -> Tuple[complex, complex]:
    m1, dm1 = asymptotic_series(mu, "M1", y, config.series_tol)
    m2, dm2 = asymptotic_series(mu, "M2", y, config.series_tol)
    if method == "wronskian":
        # normalized Wronskian of (M1, M2) is exactly i/2
        d1 = normalized_wronskian(value, slope, m2, dm2, y) / 0.5j
        d2 = normalized_wronskian(m1, dm1, value, slope, y) / 0.5j
        return complex(d1), complex(d2)
    matrix = np.array([[m1, m2], [dm1, dm2]])
    det = m1 * dm2 - m2 * dm1
    if abs(det) < 1e-10 * (abs(m1 * dm2) + abs(m2 * dm1)):
        raise MatchingError("asymptotic basis is degenerate at the matching radius", {"y": y})
    d = np.linalg.solve(matrix, np.array([value, slope]))
    return complex(d[0]), complex(d[1])


def connection_coeffs(
    sol: ComplexField,
    mu: complex,
    y: float,
    config: Optional[SelfSimilarConfig] = None,
    method: str = "matrix",
) -> Tuple[complex, complex]:
    """Coefficients (d1, d2) of a sampled solution on (M1, M2) at the matching radius.

    Args:
        sol: Samples covering ``y``
        mu: Spectral index
        y: Matching radius in the asymptotic regime
        config: Series tolerance
        method: ``matrix`` (2x2 solve) or ``wronskian`` (normalized Wronskians)

    Raises:
        MatchingError: If the 2x2 system is degenerate
        DomainError: If ``y`` is too small for the asymptotic series
    """
    config = config or SelfSimilarConfig()
    value = complex(sol.interpolate(np.array([y]))[0])
    slope = complex(radial_derivative(sol, 1).interpolate(np.array([y]))[0])
    return _connect(value, slope, mu, y, config, method)


def branch_particular(term: OscillatoryTerm, mu: complex) -> OscillatoryTerm:
    """Asymptotic particular solution of (L + mu) g = term on the same oscillatory branch.

    Raises:
        BranchSelectionError: When the branch resonates with the homogeneous exponents
    """
    k, sigma, r = term.branch, term.exponent, term.coeffs
    c_k = mu + 0.25j - 1.5j * k
    s = np.zeros(r.size, dtype=complex)
    if k in (0, 1):
        for m in range(r.size):
            a_m = 0.5j * (1 - 2 * k) * (sigma - 2 * m) + c_k
            if abs(a_m) < 1e-12:
                raise BranchSelectionError(
                    "forcing resonates with a homogeneous branch", {"branch": k, "order": m}
                )
            carry = (sigma - 2 * m + 2) * (sigma - 2 * m + 3) * s[m - 1] if m else 0.0
            s[m] = (r[m] + carry) / a_m
        return OscillatoryTerm(k, sigma, s)
    lead = k * (k - 1) / 4.0
    for m in range(r.size):
        value = r[m]
        if m >= 1:
            value -= (0.5j * (1 - 2 * k) * (sigma - 2 * m) + c_k) * s[m - 1]
        if m >= 2:
            value += (sigma - 2 * m + 2) * (sigma - 2 * m + 3) * s[m - 2]
        s[m] = value / lead
    return OscillatoryTerm(k, sigma - 2.0, s)


def _merge(terms: Sequence[OscillatoryTerm]) -> List[OscillatoryTerm]:
    merged: Dict[Tuple[int, complex], OscillatoryTerm] = {}
    for term in terms:
        key = (term.branch, complex(np.round(term.exponent, 12)))
        if key in merged:
            previous = merged[key]
            merged[key] = OscillatoryTerm(term.branch, term.exponent, previous.coeffs + term.coeffs)
        else:
            merged[key] = term
    return list(merged.values())


def quintic_terms(d1: complex, d2: complex, mu: complex) -> List[OscillatoryTerm]:
    """Branch expansion of |A|^4 A for A = d1 M1(mu) + d2 M2(mu) at large y."""
    first = asymptotic_term(mu, "M1", PRODUCT_TERMS).scaled(d1)
    second = asymptotic_term(mu, "M2", PRODUCT_TERMS).scaled(d2)
    products = []
    for mask in range(32):
        factors = [second if mask >> i & 1 else first for i in range(3)]
        factors += [(second if mask >> i & 1 else first).conj() for i in (3, 4)]
        product = factors[0]
        for factor in factors[1:]:
            product = product.times(factor)
        products.append(product)
    return _merge(products)


@dataclass(frozen=True)
class ForcedTail:
    """Asymptotic particular solution with its decay diagnostics.

    Below ``y_join`` the tail is read from an inward ODE continuation when one is attached.
    """

    which: str
    terms: Tuple[OscillatoryTerm, ...]
    decay: Dict[int, float]
    expected: Dict[int, float]
    dense: Optional[object] = None
    y_join: float = 0.0

    def evaluate(self, y) -> Tuple[np.ndarray, np.ndarray]:
        y = np.atleast_1d(np.asarray(y, dtype=float))
        value = np.zeros(y.size, dtype=complex)
        slope = np.zeros(y.size, dtype=complex)
        low = (y < self.y_join) if self.dense is not None else np.zeros(y.size, dtype=bool)
        if np.any(low):
            value[low], slope[low] = self.dense(y[low])
        high = ~low
        for term in self.terms:
            v, s = term.evaluate(y[high])
            value[high] += v
            slope[high] += s
        return value, slope


def _expected_decay(which: str, branch: int, nu: float) -> float:
    if which == "g1":
        return -2.0 + 5.0 * nu
    if branch in (0, 1):
        return -5.0 - 5.0 * nu - branch * (1.0 - 2.0 * nu)
    return -7.0 - 5.0 * nu - abs(branch) * (1.0 - 2.0 * nu)


def _tail_terms(which: str, params: Params, d_table: Dict[int, Tuple[complex, complex]]):
    mu2 = mu_index(params, 2)
    scale = 1.0 + 2.0 * params.nu
    if which == "g1":
        m2 = asymptotic_term(mu2, "M2", PRODUCT_TERMS)
        m = np.arange(m2.coeffs.size)
        coeffs = -scale * m2.coeffs * (2.0 * m2.exponent - 4.0 * m + 1.0)
        return [OscillatoryTerm(1, m2.exponent - 2.0, coeffs)]
    d1_0, d2_0 = d_table[0]
    d1_2 = d_table[2][0]
    m1 = asymptotic_term(mu2, "M1", PRODUCT_TERMS)
    m = np.arange(m1.coeffs.size)
    linear = OscillatoryTerm(
        0, m1.exponent - 2.0, d1_2 * scale * m1.coeffs * (2.0 * m1.exponent - 4.0 * m + 1.0)
    )
    return _merge(quintic_terms(d1_0, d2_0, mu_index(params, 0)) + [linear])


def solve_forced_tail(
    which: str,
    params: Params,
    d_table: Dict[int, Tuple[complex, complex]],
    window: Tuple[float, float] = (30.0, 60.0),
) -> ForcedTail:
    """Decaying particular solution g1 or g2 of (L + mu_2) g = G_{1,2}.

    Args:
        which: ``g1`` or ``g2``
        params: (nu, alpha0)
        d_table: Connection coefficients (d1^n, d2^n) for n = 0, 1, 2
        window: [Y, 2Y] used to check the decay of each branch amplitude

    Returns:
        Branch terms, measured decay exponent per branch and the expected one

    Raises:
        BranchSelectionError: If a branch grows faster than its forcing allows
    """
    if which not in ("g1", "g2"):
        raise DomainError(f"unknown forced tail {which!r}")
    mu2 = mu_index(params, 2)
    terms = [branch_particular(term, mu2) for term in _tail_terms(which, params, d_table)]
    y = np.geomspace(window[0], window[1], 16)
    decay: Dict[int, float] = {}
    expected: Dict[int, float] = {}
    for branch in sorted({t.branch for t in terms}):
        amplitude = np.zeros(y.size, dtype=complex)
        for term in terms:
            if term.branch == branch:
                amplitude += term.evaluate(y)[0] * np.exp(-0.25j * branch * y**2)
        magnitude = np.abs(amplitude)
        if np.all(magnitude > 0.0):
            slope = float(np.polyfit(np.log(y), np.log(magnitude), 1)[0])
        else:
            slope = float("-inf")
        decay[branch] = slope
        expected[branch] = _expected_decay(which, branch, params.nu)
        if slope > expected[branch] + 0.5:
            raise BranchSelectionError(
                f"{which} branch {branch} does not decay as required",
                {"branch": branch, "slope": slope, "expected": expected[branch]},
            )
    logger.debug("forced_tail_solved", which=which, decay=decay)
    return ForcedTail(which, tuple(terms), decay, expected)


@dataclass(frozen=True)
class SSProfile:
    """Sampled self-similar profile A_{n,l}."""

    label: Label
    mu: complex
    samples: ComplexField
    origin_coeffs: Tuple[complex, ...]
    infinity_data: Optional[Tuple[complex, complex]]


@dataclass(frozen=True, eq=False)
class SelfSimilarSolution:
    """Solved system for A_{0,0}, A_{1,0}, A_{2,1}, A_{2,0}.

    Attributes:
        params: (nu, alpha0)
        config: Radii and tolerances
        bases: Fundamental systems for mu_0, mu_1, mu_2
        a00, a10, c0, a20: Origin coefficients (alpha^{(0)}_{0,-1}, alpha^{(1)}_{0,0}, c_0,
            alpha^{(1)}_{0,-1})
        kappa: Origin coefficients of the forcing F, kappa[i + 2] for y^{2i-1}
        beta: Regular odd part of A_{2,0} near the origin, beta[m] for y^{2m-1}
        a20_dense: Continuation of A_{2,0} on [y_series, y_max]
        d_table: (d1^n, d2^n) for n = 0, 1, 2
        lambdas: (lambda_1, lambda_2) of the A_{2,0} decomposition
        tails: g1 and g2
    """

    params: Params
    config: SelfSimilarConfig
    bases: Tuple[SSBasis, SSBasis, SSBasis]
    a00: complex
    a10: complex
    c0: complex
    a20: complex
    kappa: np.ndarray
    beta: np.ndarray
    a20_dense: object
    d_table: Dict[int, Tuple[complex, complex]]
    lambdas: Tuple[complex, complex]
    tails: Dict[str, ForcedTail] = field(default_factory=dict)
    diagnostics: Dict[str, float] = field(default_factory=dict)

    def mu(self, n: int) -> complex:
        return self.bases[n].mu

    def evaluate(self, label: Label, y) -> Tuple[np.ndarray, np.ndarray]:
        """Value and derivative of A_{n,l} at radii y > 0."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if label == (0, 0):
            v, s = self.bases[0].evaluate("e1", y)
            return self.a00 * v, self.a00 * s
        if label == (1, 0):
            v, s = self.bases[1].evaluate("e2", y)
            return self.a10 * v, self.a10 * s
        if label == (2, 1):
            v, s = self.bases[2].evaluate("e1", y)
            return self.c0 * v, self.c0 * s
        if label == (2, 0):
            return self._evaluate_a20(y)
        raise DomainError(f"unknown profile {label}")

    def _evaluate_a20(self, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        cfg = self.config
        value = np.zeros(y.size, dtype=complex)
        slope = np.zeros(y.size, dtype=complex)
        low = y <= cfg.y_series
        high = y > cfg.y_match
        mid = ~low & ~high
        if np.any(low):
            value[low], slope[low] = _a20_series(self, y[low])
        if np.any(mid):
            value[mid], slope[mid] = self.a20_dense(y[mid])
        if np.any(high):
            value[high], slope[high] = _a20_asymptotic(self, y[high])
        return value, slope

    def profile(self, label: Label, grid: Optional[RadialGrid] = None) -> SSProfile:
        grid = grid or y_grid(self.config.y_floor, self.config.y_max, self.config.samples)
        values, _ = self.evaluate(label, grid.nodes)
        n = label[0]
        origin = {
            (0, 0): (self.a00,),
            (1, 0): (self.a10,),
            (2, 1): (self.c0,),
            (2, 0): (-self.kappa[0] / 6.0, self.a20),
        }[label]
        infinity = self.d_table.get(n) if label != (2, 0) else self.lambdas
        return SSProfile(label, self.mu(n), ComplexField(grid, values, "none"), origin, infinity)

    def profiles(self) -> List[SSProfile]:
        grid = y_grid(self.config.y_floor, self.config.y_max, self.config.samples)
        return [self.profile(label, grid) for label in ((0, 0), (1, 0), (2, 1), (2, 0))]

    def to_record(self) -> Tuple[dict, Dict[str, np.ndarray]]:
        """Index entry and arrays for the run archive."""
        grid = y_grid(self.config.y_floor, self.config.y_max, self.config.samples)
        arrays = {"y": grid.nodes}
        for label in ((0, 0), (1, 0), (2, 1), (2, 0)):
            arrays[f"A{label[0]}{label[1]}"] = self.evaluate(label, grid.nodes)[0]

        def pair(z: complex) -> List[float]:
            return [float(np.real(z)), float(np.imag(z))]

        index = {
            "mu": [pair(self.mu(n)) for n in range(3)],
            "origin": {"a00": pair(self.a00), "a10": pair(self.a10), "c0": pair(self.c0),
                       "a20": pair(self.a20)},
            "connection": {str(n): [pair(d) for d in ds] for n, ds in self.d_table.items()},
            "lambdas": [pair(v) for v in self.lambdas],
            "diagnostics": self.diagnostics,
        }
        return index, arrays


def forcing_origin_coefficients(
    a00: complex, c0: complex, params: Params, depth: int = ORIGIN_DEPTH
) -> np.ndarray:
    """Origin coefficients of the A_{2,0} forcing.

    F = c0 (i nu + 2/y d + y^-2) e1(mu_2) + |A00|^4 A00 = sum_{i >= -2} kappa_i y^{2i-1};
    entry i + 2 of the result holds kappa_i.
    """
    b0 = a00 * origin_coefficients(mu_index(params, 0), "e1", depth)
    b2 = origin_coefficients(mu_index(params, 2), "e1", depth + 1)
    nonlinear = quintic_coefficients(b0[:, None], depth - 1)[:, 0]
    kappa = np.array(nonlinear, dtype=complex)
    # c0 (2/y d + y^-2) e1 contributes (4m - 1) b_m y^{2m-3}, i nu e1 contributes b_m y^{2m-1}
    kappa[1] += -c0 * b2[0]
    for i in range(0, depth - 2):
        kappa[i + 2] += c0 * ((4 * i + 3) * b2[i + 1] + 1j * params.nu * b2[i])
    return kappa


def _a20_origin(a00: complex, params: Params, depth: int = ORIGIN_DEPTH):
    mu2 = mu_index(params, 2)
    probe = forcing_origin_coefficients(a00, 0.0, params, depth)
    kappa_m2 = probe[0]
    c0 = probe[1] + kappa_m2 / 6.0 * (mu2 - 1.25j)
    kappa = forcing_origin_coefficients(a00, c0, params, depth)
    tilde = kappa.copy()
    tilde[1] += kappa_m2 / 6.0 * (mu2 - 1.25j)
    beta = np.zeros(depth - 1, dtype=complex)
    for j in range(depth - 2):
        beta[j + 1] = ((mu2 + 1j * (j - 0.25)) * beta[j] - tilde[j + 2]) / (
            (2 * j + 1) * (2 * j + 2)
        )
    return c0, kappa, tilde, beta


def _a20_series(sol: SelfSimilarSolution, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    e1, de1 = origin_series(
        sol.mu(2), "e1", y, y_series=sol.config.y_series, with_slope=True
    )
    regular, dregular = _odd_series(sol.beta, y, -1)
    k = sol.kappa[0]
    value = -k / (6.0 * y**3) + sol.a20 * e1 + regular
    slope = k / (2.0 * y**4) + sol.a20 * de1 + dregular
    return value, slope


def _a20_asymptotic(sol: SelfSimilarSolution, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    nu = sol.params.nu
    d1, d2 = sol.d_table[2]
    lam1, lam2 = sol.lambdas
    basis = sol.bases[2]
    m1, dm1 = basis.evaluate("M1", y)
    m2, dm2 = basis.evaluate("M2", y)
    g1, dg1 = sol.tails["g1"].evaluate(y)
    g2, dg2 = sol.tails["g2"].evaluate(y)
    log = np.log(y)
    value = (2 * d1 * nu * log + lam1) * m1 + (lam2 - 2 * (nu + 1) * d2 * log) * m2
    value += d2 * g1 + g2
    slope = (2 * d1 * nu * log + lam1) * dm1 + 2 * d1 * nu * m1 / y
    slope += (lam2 - 2 * (nu + 1) * d2 * log) * dm2 - 2 * (nu + 1) * d2 * m2 / y
    slope += d2 * dg1 + dg2
    return value, slope


def _inner_coefficient(tails: Dict[Tuple[int, int, int], complex], key) -> complex:
    if key not in tails:
        raise DependencyError(
            f"inner tail coefficient alpha^({key[0]})_{{{key[1]},{key[2]}}} is missing",
            {"key": list(key)},
        )
    return complex(tails[key])


def solve_A_system(
    params: Params,
    inner_tail,
    config: Optional[SelfSimilarConfig] = None,
) -> SelfSimilarSolution:
    """Solve the four-profile system with origin data fixed by the inner tails.

    Args:
        params: (nu, alpha0)
        inner_tail: Inner series or flat map (k, l, j) -> alpha^{(k)}_{l,j}; needs
            alpha^{(1)}_{0,0} and alpha^{(1)}_{0,-1}
        config: Radii and tolerances

    Returns:
        Solved system with connection data and forced tails

    Raises:
        DependencyError: When an inner coefficient is missing
    """
    config = config or SelfSimilarConfig()
    tails = inner_tail.tail_coeffs if isinstance(inner_tail, InnerSeries) else dict(inner_tail)
    a00 = complex(GroundStateKernel.tail_coefficient(-1))
    a10 = _inner_coefficient(tails, (1, 0, 0))
    a20 = _inner_coefficient(tails, (1, 0, -1))
    if (0, 0, -1) in tails:
        logger.debug("w_tail_check", fitted=abs(tails[(0, 0, -1)]), exact=a00.real)

    bases = tuple(SSBasis.build(mu_index(params, n), config) for n in range(3))
    c0, kappa, tilde, beta = _a20_origin(a00, params)
    d_table = {
        0: tuple(a00 * bases[0].connection[0]),
        1: tuple(a10 * bases[1].connection[1]),
        2: tuple(c0 * bases[2].connection[0]),
    }

    def forcing(y: np.ndarray) -> np.ndarray:
        e1, de1 = bases[2].evaluate("e1", y)
        a, _ = bases[0].evaluate("e1", y)
        a = a00 * a
        return c0 * (1j * params.nu * e1 + 2.0 * de1 / y + e1 / y**2) + np.abs(a) ** 4 * a

    mu2 = mu_index(params, 2)
    ys = config.y_series
    head_k = kappa[0]
    e1s, de1s = origin_series(mu2, "e1", ys, y_series=ys, with_slope=True)
    reg, dreg = _odd_series(beta, np.array([ys]), -1)
    init = (
        -head_k / (6.0 * ys**3) + a20 * e1s + reg[0],
        head_k / (2.0 * ys**4) + a20 * de1s + dreg[0],
    )
    a20_dense = _integrate(mu2, init, (ys, config.y_max), forcing, config)

    g_tails = {}
    for name in ("g1", "g2"):
        tail = solve_forced_tail(name, params, d_table, (config.y_match, 2 * config.y_match))
        source = _tail_forcing(name, params, bases, a00, d_table[2][0])
        init = tuple(v[0] for v in tail.evaluate(config.y_match))
        inward = _integrate(mu2, init, (config.y_match, config.y_floor), source, config)
        g_tails[name] = replace(tail, dense=inward, y_join=config.y_match)
    lambdas, drift = _lambdas(params, config, bases[2], a20_dense, d_table, g_tails)
    diagnostics = {
        "wronskian_drift_mu0": bases[0].wronskian_drift,
        "wronskian_drift_mu1": bases[1].wronskian_drift,
        "wronskian_drift_mu2": bases[2].wronskian_drift,
        "lambda_matching_drift": drift,
        "kappa_m2": float(abs(kappa[0])),
    }
    solution = SelfSimilarSolution(
        params=params,
        config=config,
        bases=bases,
        a00=a00,
        a10=a10,
        c0=complex(c0),
        a20=a20,
        kappa=kappa,
        beta=beta,
        a20_dense=a20_dense,
        d_table=d_table,
        lambdas=lambdas,
        tails=g_tails,
        diagnostics=diagnostics,
    )
    logger.info(
        "self_similar_solved",
        mu0=str(mu_index(params, 0)),
        c0=str(complex(c0)),
        d2_0=abs(d_table[0][1]),
        lambda1=str(lambdas[0]),
        lambda2=str(lambdas[1]),
    )
    return solution


def _tail_forcing(which: str, params: Params, bases, a00: complex, d1_2: complex) -> Forcing:
    """Pointwise G1 or G2, for continuing the forced tails below the matching radius."""
    s = 1.0 + 2.0 * params.nu

    def g1_source(y: np.ndarray) -> np.ndarray:
        m2, dm2 = bases[2].evaluate("M2", y)
        return -s * (2.0 * dm2 / y + m2 / y**2 - 1j * m2)

    def g2_source(y: np.ndarray) -> np.ndarray:
        a, _ = bases[0].evaluate("e1", y)
        a = a00 * a
        m1, dm1 = bases[2].evaluate("M1", y)
        return np.abs(a) ** 4 * a + d1_2 * s * (2.0 * dm1 / y + m1 / y**2)

    return g1_source if which == "g1" else g2_source


def _lambdas(params, config, basis, a20_dense, d_table, g_tails):
    """Match A_{2,0} minus the logarithmic and forced parts onto (M1, M2) at Y and 1.5 Y."""
    nu = params.nu
    d1, d2 = d_table[2]
    results = []
    for y in (config.y_match, min(1.5 * config.y_match, config.y_max)):
        value, slope = a20_dense(y)
        m1, dm1 = basis.evaluate("M1", np.array([y]))
        m2, dm2 = basis.evaluate("M2", np.array([y]))
        g1, dg1 = g_tails["g1"].evaluate(np.array([y]))
        g2, dg2 = g_tails["g2"].evaluate(np.array([y]))
        log = np.log(y)
        hat = value - 2 * d1 * nu * log * m1[0] + 2 * (nu + 1) * d2 * log * m2[0]
        dhat = slope - 2 * d1 * nu * (dm1[0] * log + m1[0] / y)
        dhat += 2 * (nu + 1) * d2 * (dm2[0] * log + m2[0] / y)
        hom = hat - d2 * g1[0] - g2[0]
        dhom = dhat - d2 * dg1[0] - dg2[0]
        results.append(_connect(hom, dhom, basis.mu, y, config))
    scale = max(abs(results[0][0]) + abs(results[0][1]), 1e-300)
    drift = (abs(results[0][0] - results[1][0]) + abs(results[0][1] - results[1][1])) / scale
    return results[0], float(drift)


def _apply_operator(f: ComplexField, mu: complex) -> np.ndarray:
    """(L + mu) f on a y grid without the origin."""
    y = f.nodes
    d1 = radial_derivative(f, 1).values
    d2 = radial_derivative(f, 2).values
    return -d2 - 2.0 * d1 / y + 0.5j * (0.5 * f.values + y * d1) + mu * f.values


def ss_residual_split(
    solution: SelfSimilarSolution, y_range: Tuple[float, float] = (0.5, 10.0), samples: int = 1601
) -> Dict[str, float]:
    """Relative sup of S_{0,0}, S_{1,0}, S_{2,1}, S_{2,0} on a window, by grid derivatives."""
    grid = y_grid(y_range[0], y_range[1], samples)
    y = grid.nodes
    fields = {
        label: ComplexField(grid, solution.evaluate(label, y)[0], "none")
        for label in ((0, 0), (1, 0), (2, 1), (2, 0))
    }
    a21 = fields[(2, 1)]
    a00 = fields[(0, 0)].values
    da21 = radial_derivative(a21, 1).values
    nu = solution.params.nu
    split = {
        "S00": _apply_operator(fields[(0, 0)], solution.mu(0)),
        "S10": _apply_operator(fields[(1, 0)], solution.mu(1)),
        "S21": _apply_operator(a21, solution.mu(2)),
        "S20": _apply_operator(fields[(2, 0)], solution.mu(2))
        - 1j * nu * a21.values
        - 2.0 * da21 / y
        - a21.values / y**2
        - np.abs(a00) ** 4 * a00,
    }
    interior = slice(8, -8)
    out = {}
    for name, values in split.items():
        label = {"S00": (0, 0), "S10": (1, 0), "S21": (2, 1), "S20": (2, 0)}[name]
        size = max(float(np.max(np.abs(fields[label].values))), 1e-300)
        out[name] = float(np.max(np.abs(values[interior]))) / size
    return out


def w_ap(solution: SelfSimilarSolution, y: np.ndarray, t: float) -> np.ndarray:
    """Truncated self-similar profile w(y, t)."""
    s = 1.0 + 2.0 * solution.params.nu
    y = np.asarray(y, dtype=float)
    a00, _ = solution.evaluate((0, 0), y)
    a10, _ = solution.evaluate((1, 0), y)
    a20, _ = solution.evaluate((2, 0), y)
    a21, _ = solution.evaluate((2, 1), y)
    log = np.log(y) + 0.5 * s * np.log(t)
    return t ** (-s / 4) * a00 + t ** (-3 * s / 4) * a10 + t ** (-5 * s / 4) * (a20 + log * a21)


def ss_region(params: Params, eps1: float, eps2: float, t: float) -> Tuple[float, float]:
    """Self-similar region t^{1/2+nu-eps1}/10 <= rho <= 10 t^{1/2+nu+eps2} in inner variables."""
    return 0.1 * t ** (0.5 + params.nu - eps1), 10.0 * t ** (0.5 + params.nu + eps2)


@dataclass(frozen=True)
class SSAssembly:
    """Self-similar approximation at one time, in inner variables."""

    t: float
    region: Tuple[float, float]
    u: ComplexField
    chi_norms: Dict[str, float]
    residual_l2: Dict[Tuple[int, int], float]
    residual_bound: float
    mismatch: Dict[int, float]
    mismatch_bound: Dict[int, float]


def assemble_ss(
    solution: SelfSimilarSolution,
    t: float,
    eps1: float,
    eps2: float,
    inner: Optional[InnerSeries] = None,
    samples: Optional[int] = None,
    t_min: float = 10.0,
) -> SSAssembly:
    """Self-similar profile u_ss(rho, t), its residual norms and the inner/ss mismatch.

    Args:
        solution: Solved profile system
        t: Time
        eps1: Inner matching exponent
        eps2: Remote matching exponent
        inner: Inner series for the overlap mismatch (optional)
        samples: Number of radial samples on the region
        t_min: Validity threshold

    Returns:
        Profile on a geometric rho grid covering the region with norm reports

    Raises:
        DomainError: Below the validity threshold
    """
    if t < t_min:
        raise DomainError(f"t = {t:g} is below the validity threshold {t_min:g}", {"t": t})
    params = solution.params
    s = 1.0 + 2.0 * params.nu
    lo, hi = ss_region(params, eps1, eps2, t)
    grid = y_grid(lo, hi, samples or solution.config.samples)
    rho = grid.nodes
    y = t ** (-s / 2) * rho
    w = w_ap(solution, y, t)
    u = ComplexField(grid, t ** (-s / 4) * w, "none")
    chi = ComplexField(grid, u.values - GroundStateKernel.w(rho), "none")

    a00, _ = solution.evaluate((0, 0), y)
    residual = -np.abs(w) ** 4 * w + t ** (-5 * s / 4) * np.abs(a00) ** 4 * a00
    r = ComplexField(grid, t ** (-5 * s / 4) * residual, "none")
    residual_l2 = {
        (k, l): weighted_norm(r, k, l) for k in range(3) for l in range(3 - k)
    }
    chi_norms = {"sup": chi.sup()}
    for k in range(3):
        for l in range(3 - k):
            if k + l >= 1:
                chi_norms[f"sup_{k}{l}"] = weighted_norm(chi, k, l, kind="sup")
                chi_norms[f"l2_{k}{l}"] = weighted_norm(chi, k, l)
    bound = t ** (-(2.25) * s + 2.5 * eps1)

    mismatch: Dict[int, float] = {}
    mismatch_bound: Dict[int, float] = {}
    if inner is not None:
        n = inner.order
        a_lo, a_hi = 0.1 * t ** (0.5 + params.nu - eps1), 10.0 * t ** (0.5 + params.nu - eps1)
        a_hi = min(a_hi, inner.grid.r_max)
        annulus = np.geomspace(a_lo, a_hi, 200)
        u_in = ComplexField(inner.grid, _inner_values(inner, t), "even")
        factor = t ** (-s) * (np.log(t) + t ** (1.5 * s - (2 * n + 3) * eps1))
        for l in range(2):
            source = u_in if l == 0 else radial_derivative(u_in, 1)
            ss_field = u if l == 0 else radial_derivative(u, 1)
            mask = (annulus >= rho[0]) & (annulus <= rho[-1])
            diff = source.interpolate(annulus[mask]) - ss_field.interpolate(annulus[mask])
            weight = annulus[mask] ** (2 + l)
            mismatch[l] = float(np.max(np.abs(diff) * weight, initial=0.0))
            mismatch_bound[l] = float(factor)
    logger.debug("ss_assembled", t=t, residual=residual_l2[(0, 0)], bound=bound)
    return SSAssembly(
        t=t,
        region=(lo, hi),
        u=u,
        chi_norms=chi_norms,
        residual_l2=residual_l2,
        residual_bound=bound,
        mismatch=mismatch,
        mismatch_bound=mismatch_bound,
    )


def _inner_values(inner: InnerSeries, t: float) -> np.ndarray:
    tau = inner.tau(t)
    values = inner.profile(0).values.copy()
    for k, chi in enumerate(inner.chis, start=1):
        values = values + tau**k * chi.values
    return values
