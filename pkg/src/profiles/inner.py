"""Inner-region corrections chi_k and the truncated inner profile.

The profile is u = W + sum_k tau^k chi_k with tau = t^{-(1+2nu)}. Each chi_k = v_k^+ + i v_k^-
solves L+ v_k^+ = Re D_k, L- v_k^- = Im D_k with zero data at the origin, where D_k collects
the order-k part of the time derivative, the modulation terms and the quintic nonlinearity.
"""

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from tqdm import tqdm

from ..numerics.fields import ComplexField, SpinorField, radial_derivative, weighted_norm
from ..numerics.grid import RadialGrid, make_grid
from ..utils.config import InnerConfig, Params
from ..utils.errors import DomainError, OrderingError, TailFitConditioningError
from ..utils.logger import get_logger, progress_enabled
from .ground_state import GroundStateKernel, apply_L

logger = get_logger(__name__)

MAX_CONDITION = 1e12
REGION_FACTOR = 10.0


@dataclass(frozen=True)
class TailFit:
    """Large-rho coefficients alpha_{l,j} of one profile and the fit quality."""

    order: int
    window: Tuple[float, float]
    coefficients: Dict[Tuple[int, int], complex]
    residual: float
    condition: float

    def coefficient(self, log_power: int, power: int) -> complex:
        return self.coefficients.get((log_power, power), 0.0j)


@dataclass(frozen=True, eq=False)
class InnerSeries:
    """Corrections chi_1..chi_N on a common grid.

    Attributes:
        grid: Inner grid starting at rho = 0
        params: (nu, alpha0, delta)
        eps1: Matching exponent of the inner region
        t_min: Smallest time at which the truncated profile is evaluated
        chis: chi_1..chi_N as complex fields
        tails: Tail fits by order (only for the orders that were fitted)
    """

    grid: RadialGrid
    params: Params
    eps1: float
    t_min: float
    chis: Tuple[ComplexField, ...]
    tails: Dict[int, TailFit] = field(default_factory=dict)

    @property
    def order(self) -> int:
        return len(self.chis)

    @property
    def tau_exponent(self) -> float:
        return 1.0 + 2.0 * self.params.nu

    @property
    def tail_coeffs(self) -> Dict[Tuple[int, int, int], complex]:
        """Flat map (k, l, j) -> alpha^{(k)}_{l,j}."""
        return {
            (k, l, j): value
            for k, fit in self.tails.items()
            for (l, j), value in fit.coefficients.items()
        }

    def profile(self, k: int) -> ComplexField:
        """chi_k, with chi_0 = W."""
        if k == 0:
            return ComplexField(self.grid, GroundStateKernel.w(self.grid.nodes), "even")
        if not 1 <= k <= self.order:
            raise OrderingError(f"chi_{k} is not available", {"order": self.order})
        return self.chis[k - 1]

    def v_pair(self, k: int) -> Tuple[ComplexField, ComplexField]:
        chi = self.profile(k)
        return chi.with_values(chi.values.real), chi.with_values(chi.values.imag)

    def truncated(self, order: int) -> "InnerSeries":
        if not 0 <= order <= self.order:
            raise OrderingError(f"cannot truncate order {self.order} series at {order}")
        tails = {k: fit for k, fit in self.tails.items() if k <= order}
        return replace(self, chis=self.chis[:order], tails=tails)

    def region_radius(self, t: float) -> float:
        """Outer edge 10 t^{1/2+nu-eps1} of the inner region."""
        return REGION_FACTOR * t ** (0.5 + self.params.nu - self.eps1)

    def tau(self, t: float) -> float:
        return t ** (-self.tau_exponent)

    def to_record(self) -> Tuple[dict, Dict[str, np.ndarray]]:
        """Index entry and arrays for the run archive."""
        arrays = {"nodes": self.grid.nodes}
        if self.chis:
            arrays["chis"] = np.stack([chi.values for chi in self.chis])
        index = {
            "order": self.order,
            "eps1": self.eps1,
            "nu": self.params.nu,
            "alpha0": self.params.alpha0,
            "tail_coeffs": [
                {"k": k, "l": l, "j": j, "re": v.real, "im": v.imag}
                for (k, l, j), v in sorted(self.tail_coeffs.items())
            ],
        }
        return index, arrays


def _convolve(a: np.ndarray, b: np.ndarray, max_order: int) -> np.ndarray:
    """Cauchy product of two coefficient stacks (order, node), truncated at max_order."""
    size = min(a.shape[0] + b.shape[0] - 1, max_order + 1)
    out = np.zeros((size, a.shape[1]), dtype=complex)
    for i in range(min(a.shape[0], size)):
        span = min(b.shape[0], size - i)
        out[i : i + span] += a[i] * b[:span]
    return out


def quintic_coefficients(coeffs: np.ndarray, max_order: int) -> np.ndarray:
    """Coefficients of U^3 conj(U)^2 for U = sum_p coeffs[p] (power series in one variable)."""
    u2 = _convolve(coeffs, coeffs, max_order)
    u3 = _convolve(u2, coeffs, max_order)
    ubar = np.conj(coeffs)
    return _convolve(u3, _convolve(ubar, ubar, max_order), max_order)


def _generator(chi: ComplexField) -> np.ndarray:
    """(1/2 + rho d) chi."""
    return 0.5 * chi.values + chi.nodes * radial_derivative(chi, 1).values


def _linear_forcing(k: int, previous: ComplexField, params: Params, generator: np.ndarray):
    scale = 1.0 + 2.0 * params.nu
    return (
        -1j * scale * (k - 1) * previous.values
        - params.alpha0 * previous.values
        + 1j * params.nu * generator
    )


def _forcing_values(k: int, profiles: Sequence[ComplexField], params: Params) -> np.ndarray:
    grid = profiles[0].grid
    previous = profiles[k - 1]
    if k == 1:
        generator = GroundStateKernel.w1(grid.nodes)
    else:
        generator = _generator(previous)
    linear = _linear_forcing(k, previous, params, generator)
    if k == 1:
        return linear
    stack = np.stack([p.values for p in profiles[:k]])
    return linear + quintic_coefficients(stack, k)[k]


def build_forcing(k: int, prev: InnerSeries) -> SpinorField:
    """Forcing D_k of the order-k system from chi_1..chi_{k-1}.

    Args:
        k: Order, >= 1
        prev: Series holding at least chi_1..chi_{k-1}

    Returns:
        Spinor (D_k, -conj D_k)

    Raises:
        OrderingError: If k < 1 or chi_{k-1} is not available
    """
    if k < 1 or prev.order < k - 1:
        raise OrderingError(
            f"forcing of order {k} needs chi_1..chi_{k - 1}", {"available": prev.order}
        )
    profiles = [prev.profile(p) for p in range(k)]
    d = ComplexField(prev.grid, _forcing_values(k, profiles, prev.params), "even")
    return SpinorField(d, -d.conj())


def _variation_of_parameters(grid: RadialGrid, sign: str, source: np.ndarray) -> np.ndarray:
    """Solution of L_sign v = source with v(0) = v'(0) = 0."""
    rho = grid.nodes
    phi = GroundStateKernel.phi(sign, rho)
    with_phi = grid.cumulative(rho**2 * phi * source)
    with_theta = grid.cumulative(GroundStateKernel.rho2_theta(sign, rho) * source)
    out = np.zeros_like(rho)
    inside = rho > 0.0
    theta = GroundStateKernel.theta(sign, rho[inside])
    out[inside] = phi[inside] * with_theta[inside].real - theta * with_phi[inside].real
    return out


def solve_chi_k(k: int, forcing: SpinorField) -> Tuple[ComplexField, ComplexField]:
    """Variation-of-parameters solve of L+/- v_k^+/- = Re/Im D_k.

    Args:
        k: Order, only used for logging
        forcing: D_k as returned by :func:`build_forcing`

    Returns:
        (v_k^+, v_k^-) as real-valued fields
    """
    grid = forcing.grid
    d = forcing.up.values
    v_plus = _variation_of_parameters(grid, "+", d.real)
    v_minus = _variation_of_parameters(grid, "-", d.imag)
    logger.debug(
        "chi_solved",
        order=k,
        sup_plus=float(np.max(np.abs(v_plus))),
        sup_minus=float(np.max(np.abs(v_minus))),
    )
    return ComplexField(grid, v_plus, "even"), ComplexField(grid, v_minus, "even")


def tail_basis(k: int, depth: int) -> List[Tuple[int, int]]:
    """Exponent pairs (l, j) of (ln rho)^l rho^j used for the order-k tail fit."""
    pairs = []
    for log_power in range(k + 1):
        top = 2 * k - 2 * log_power - 1
        for power in range(top, top - 2 * depth, -1):
            if log_power == k and k > 0 and power % 2 == 0:
                continue
            pairs.append((log_power, power))
    return pairs


def fit_tail_coeffs(
    chi: ComplexField, window: Tuple[float, float], k: int, depth: int = 4
) -> TailFit:
    """Least-squares fit of a profile against (ln rho)^l rho^j on a window.

    Args:
        chi: Profile sampled on a grid covering the window
        window: (rho_a, rho_b)
        k: Order of the profile (0 for W)
        depth: Number of powers per logarithmic level, counted in steps of two

    Returns:
        Fitted coefficients with relative residual and condition number

    Raises:
        TailFitConditioningError: If the window holds too few nodes or the basis is ill conditioned
    """
    mask = chi.grid.mask(window)
    rho = chi.nodes[mask]
    pairs = tail_basis(k, depth)
    if rho.size < 2 * len(pairs):
        raise TailFitConditioningError(
            "tail window holds too few nodes",
            {"nodes": int(rho.size), "columns": len(pairs), "window": list(window)},
        )
    log_rho = np.log(rho)
    basis = np.stack([log_rho**l * rho**j for l, j in pairs], axis=1)
    scale = np.linalg.norm(basis, axis=0)
    normalized = basis / scale
    solution, _, rank, singular = linalg.lstsq(normalized, chi.values[mask])
    condition = float(singular[0] / singular[-1]) if singular[-1] > 0 else float("inf")
    if condition > MAX_CONDITION or rank < len(pairs):
        raise TailFitConditioningError(
            "tail basis is ill conditioned on the window",
            {"condition": condition, "rank": int(rank), "order": k, "window": list(window)},
        )
    coefficients = solution / scale
    fitted = basis @ coefficients
    size = max(float(np.linalg.norm(chi.values[mask])), 1e-300)
    residual = float(np.linalg.norm(fitted - chi.values[mask]) / size)
    return TailFit(
        order=k,
        window=(float(window[0]), float(window[1])),
        coefficients={pair: complex(c) for pair, c in zip(pairs, coefficients)},
        residual=residual,
        condition=condition,
    )


def build_inner_series(
    params: Params, config: InnerConfig, grid: Optional[RadialGrid] = None
) -> InnerSeries:
    """Solve for chi_1..chi_N recursively and fit the low-order tails.

    Args:
        params: (nu, alpha0, delta)
        config: Inner settings (order, eps1, grid, fit window)
        grid: Optional prebuilt grid, otherwise built from ``config.grid``

    Returns:
        Immutable inner series
    """
    config.check_matching(params.nu)
    grid = grid or make_grid(config.grid)
    eps1 = config.resolved_eps1(params.nu)
    profiles = [ComplexField(grid, GroundStateKernel.w(grid.nodes), "even")]
    steps = tqdm(
        range(1, config.order + 1), desc="inner orders", disable=not progress_enabled(), leave=False
    )
    for k in steps:
        d = ComplexField(grid, _forcing_values(k, profiles, params), "even")
        v_plus, v_minus = solve_chi_k(k, SpinorField(d, -d.conj()))
        profiles.append(ComplexField(grid, v_plus.values + 1j * v_minus.values, "even"))

    tails: Dict[int, TailFit] = {}
    for k in range(0, min(config.tail_fit_orders, config.order) + 1):
        try:
            tails[k] = fit_tail_coeffs(profiles[k], config.fit_window, k, config.fit_depth)
        except TailFitConditioningError as e:
            logger.warning("tail_fit_skipped", order=k, error=str(e), **e.details)

    series = InnerSeries(
        grid=grid,
        params=params,
        eps1=eps1,
        t_min=config.t_min,
        chis=tuple(profiles[1:]),
        tails=tails,
    )
    logger.info(
        "inner_series_built",
        order=series.order,
        eps1=eps1,
        nu=params.nu,
        alpha0=params.alpha0,
        fitted_tails=sorted(tails),
    )
    return series


def _check_time(series: InnerSeries, t: float) -> float:
    if t < series.t_min:
        raise DomainError(
            f"t = {t:g} is below the validity threshold {series.t_min:g}", {"t": t}
        )
    radius = series.region_radius(t)
    if radius > series.grid.r_max:
        raise DomainError(
            "inner region exceeds the inner grid",
            {"t": t, "region": radius, "r_max": series.grid.r_max},
        )
    return radius


def _scaled_coefficients(series: InnerSeries, t: float) -> np.ndarray:
    tau = series.tau(t)
    stack = [series.profile(0).values]
    stack += [tau ** (k + 1) * chi.values for k, chi in enumerate(series.chis)]
    return np.stack(stack)


def assemble_inner(series: InnerSeries, t: float) -> ComplexField:
    """u_in = W + sum_k t^{-k(1+2nu)} chi_k on the inner grid.

    Raises:
        DomainError: Below the validity threshold or when the region leaves the grid
    """
    _check_time(series, t)
    return ComplexField(series.grid, _scaled_coefficients(series, t).sum(axis=0), "even")


@dataclass(frozen=True)
class InnerResidual:
    """Residual of the truncated inner profile at one time."""

    t: float
    region: float
    field: SpinorField
    l2: Dict[Tuple[int, int], float]
    sup: Dict[Tuple[int, int], float]
    bound: float

    def worst_ratio(self) -> float:
        return max(self.l2.values()) / self.bound


def _series_residual(series: InnerSeries, t: float) -> np.ndarray:
    coeffs = _scaled_coefficients(series, t)
    n = series.order
    if n == 0:
        previous = series.profile(0)
        generator = GroundStateKernel.w1(series.grid.nodes)
    else:
        previous = ComplexField(series.grid, coeffs[n], "even")
        generator = _generator(previous)
    tau = series.tau(t)
    residual = -tau * _linear_forcing(n + 1, previous, series.params, generator)
    nonlinear = quintic_coefficients(coeffs, 5 * n)
    if nonlinear.shape[0] > n + 1:
        residual = residual - nonlinear[n + 1 :].sum(axis=0)
    return residual


def _direct_residual(series: InnerSeries, t: float) -> np.ndarray:
    coeffs = _scaled_coefficients(series, t)
    tau = series.tau(t)
    u = ComplexField(series.grid, coeffs.sum(axis=0), "even")
    orders = np.arange(coeffs.shape[0])[:, None]
    time_part = 1j * series.tau_exponent * tau * (orders * coeffs).sum(axis=0)
    p = series.params
    return (
        time_part
        - u.laplacian().values
        + p.alpha0 * tau * u.values
        - 1j * p.nu * tau * _generator(u)
        - np.abs(u.values) ** 4 * u.values
    )


def inner_residual(series: InnerSeries, t: float, mode: str = "series") -> InnerResidual:
    """Residual of the truncated inner profile and its weighted norms for k + l <= 2.

    Args:
        series: Inner series
        t: Time
        mode: ``series`` (order-by-order tail of the expansion) or ``direct`` (pointwise
            evaluation of the equation, limited by the grid derivatives)

    Returns:
        Residual spinor, L^2(rho^2 d rho) and sup norms of rho^{-k} d^l R on the inner region,
        and the target bound t^{-3(1+2nu)/4 - eps1(2N+1/2)}

    Raises:
        DomainError: Below the validity threshold or when the region leaves the grid
    """
    radius = _check_time(series, t)
    values = _direct_residual(series, t) if mode == "direct" else _series_residual(series, t)
    r = ComplexField(series.grid, values, "even")
    window = (0.0, radius)
    l2, sup = {}, {}
    for k in range(3):
        for l in range(3 - k):
            l2[(k, l)] = weighted_norm(r, k, l, window)
            sup[(k, l)] = weighted_norm(r, k, l, window, kind="sup")
    bound = t ** (-0.75 * series.tau_exponent - series.eps1 * (2 * series.order + 0.5))
    logger.debug("inner_residual", t=t, mode=mode, l2=l2[(0, 0)], bound=bound)
    return InnerResidual(
        t=t, region=radius, field=SpinorField(r, -r.conj()), l2=l2, sup=sup, bound=bound
    )


def correction_norms(series: InnerSeries, t: float) -> Dict[str, float]:
    """Sup and weighted L^2 norms of chi_in = u_in - W on the inner region."""
    radius = _check_time(series, t)
    coeffs = _scaled_coefficients(series, t)
    chi = ComplexField(series.grid, coeffs[1:].sum(axis=0), "even")
    window = (0.0, radius)
    out = {"sup": chi.sup(window)}
    for k in range(3):
        for l in range(3 - k):
            out[f"l2_{k}{l}"] = weighted_norm(chi, k, l, window)
            if k + l >= 1:
                out[f"sup_{k}{l}"] = weighted_norm(chi, k, l, window, kind="sup")
    return out


def origin_slope(chi: ComplexField, decades: float = 1.0) -> float:
    """Log-log slope of |chi| between the first positive node h and 10^decades h."""
    positive = chi.nodes[chi.nodes > 0.0]
    h = positive[0]
    mask = (chi.nodes >= h) & (chi.nodes <= h * 10.0**decades)
    amplitude = np.abs(chi.values[mask])
    keep = amplitude > 0.0
    if np.count_nonzero(keep) < 2:
        return float("inf")
    slope, _ = np.polyfit(np.log(chi.nodes[mask][keep]), np.log(amplitude[keep]), 1)
    return float(slope)


def polynomial_degree_check(
    k: int, config: InnerConfig, scale: float = 0.02, grid: Optional[RadialGrid] = None
) -> Dict[str, float]:
    """Check that chi_k is a polynomial of joint degree <= k in (alpha0, nu).

    Builds chi_k on a (k+2) x (k+2) lattice of parameters in [-scale, scale]^2 and fits a
    total-degree-k polynomial at every node.

    Returns:
        Relative interpolation residual and the size of chi_k over the lattice
    """
    grid = grid or make_grid(config.grid)
    settings = config.model_copy(
        update={"order": k, "enforce_matching_constraint": False, "tail_fit_orders": 0}
    )
    lattice = np.linspace(-scale, scale, k + 2)
    samples, rows = [], []
    for alpha0 in lattice:
        for nu in lattice:
            series = build_inner_series(Params(nu=nu, alpha0=alpha0), settings, grid)
            samples.append(series.profile(k).values)
            rows.append([alpha0**m * nu**n for m in range(k + 1) for n in range(k + 1 - m)])
    design = np.asarray(rows)
    data = np.stack(samples)
    solution, *_ = linalg.lstsq(design, data)
    size = max(float(np.max(np.abs(data))), 1e-300)
    residual = float(np.max(np.abs(design @ solution - data)) / size)
    logger.info("polynomial_degree_checked", order=k, residual=residual)
    return {"order": k, "residual": residual, "size": size}


def order_residuals(
    series: InnerSeries, orders: Optional[Sequence[int]] = None, window: float = 50.0
) -> Dict[int, float]:
    """max |L+/- v_k^+/- - Re/Im D_k| / max |D_k| on rho <= window for each requested order."""
    orders = orders if orders is not None else range(1, series.order + 1)
    mask = series.grid.mask((0.0, window))
    out = {}
    for k in orders:
        d = build_forcing(k, series).up.values
        v_plus, v_minus = series.v_pair(k)
        defect = np.maximum(
            np.abs(apply_L("+", v_plus).values - d.real),
            np.abs(apply_L("-", v_minus).values - d.imag),
        )
        scale = max(float(np.max(np.abs(d[mask]))), 1e-300)
        out[k] = float(np.max(defect[mask])) / scale
    logger.debug("order_residuals", worst=max(out.values(), default=0.0))
    return out
