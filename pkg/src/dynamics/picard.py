"""Finite-horizon fixed-point iteration for the remainder f = u - U in rescaled variables.

With lambda = t^nu, alpha = alpha0 ln t, y = lambda x and tau = t^{1+2nu}/(1+2nu), the exact
solution is written e^{i alpha} lambda^{1/2} (U + f)(y, tau) where U is the glued approximation.
The spinor (f, conj f) obeys

    i f_tau = (H + l/tau) f + F(f) + r,

F collecting the potential correction V1 f + V2 conj f and the superlinear part of the quintic
term, and r the rescaled error of the approximation. The map J splits along P, P+ and P-: the
P-part is integrated backward from the horizon with the linearized propagator; the P+ and P-
coefficients use the explicit exponential kernels with zero data at the horizon and at tau1.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from ..profiles.ground_state import GroundStateKernel
from ..profiles.gluing import GlobalApprox, sample_window
from ..spectral.operator import EigenData, LinearizedOperator, eigenpairs
from ..spectral.propagator import LinearPropagator
from ..utils.config import Params, PicardConfig
from ..utils.errors import ConfigurationError, DomainError
from ..utils.logger import get_logger

logger = get_logger(__name__)

# Weight exponent of the remainder norm sup ||f(tau)||_{H^2} tau^{1 + 1/16}
DECAY = 1.0 + 1.0 / 16.0

Background = Callable[[float], Tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class TimeMap:
    """Conversions between t and tau for given exponents."""

    params: Params

    @property
    def exponent(self) -> float:
        return 1.0 + 2.0 * self.params.nu

    @property
    def alpha1(self) -> float:
        return self.params.alpha0 / self.exponent

    @property
    def nu1(self) -> float:
        return self.params.nu / self.exponent

    def tau(self, t: float) -> float:
        return t**self.exponent / self.exponent

    def t(self, tau: float) -> float:
        return (self.exponent * tau) ** (1.0 / self.exponent)


def glued_background(approx: GlobalApprox, nodes: np.ndarray) -> Background:
    """U and r on the rescaled radii y = nodes from the glued approximation."""
    clock = TimeMap(approx.params)
    p = approx.params

    def background(tau: float) -> Tuple[np.ndarray, np.ndarray]:
        t = clock.t(tau)
        psi, residual = sample_window(approx, t ** (-p.nu) * nodes, t)
        rotation = np.exp(-1j * p.alpha0 * np.log(t))
        return rotation * t ** (-0.5 * p.nu) * psi, rotation * t ** (-2.5 * p.nu) * residual

    return background


def ground_background(nodes: np.ndarray) -> Background:
    """U = W and r = 0, for which f = 0 is the fixed point."""
    w = GroundStateKernel.w(nodes).astype(complex)
    zero = np.zeros(nodes.size, dtype=complex)
    return lambda tau: (w, zero)


@dataclass(frozen=True)
class PicardReport:
    """Outcome of the iteration on one horizon.

    Attributes:
        tau1: First time of the grid
        tau_max: Horizon, where the P and P+ parts vanish
        taus: Geometric time grid
        norms: Weighted norm sup ||f||_{H^2} tau^{1+1/16} after each iteration
        differences: Weighted norm of successive differences
        ratios: differences[m+1] / differences[m]
        converged: Every ratio is below the gate (zero differences count as converged)
        bound_holds: ||f(tau)||_{H^2} <= tau^{-1-1/16} on the grid for the last iterate
        remainder: Final iterate, one line vector per grid time
        horizon_change: Relative change of the final norm when the horizon is doubled
    """

    tau1: float
    tau_max: float
    taus: np.ndarray
    norms: List[float]
    differences: List[float]
    ratios: List[float]
    converged: bool
    bound_holds: bool
    remainder: np.ndarray = field(repr=False)
    horizon_change: Optional[float] = None

    def to_rows(self) -> List[Dict[str, float]]:
        rows = []
        for i, (norm_value, diff) in enumerate(zip(self.norms, self.differences)):
            ratio = self.ratios[i - 1] if i > 0 and i - 1 < len(self.ratios) else float("nan")
            rows.append(
                {"iteration": i + 1, "norm": norm_value, "difference": diff, "ratio": ratio}
            )
        return rows

    def summary(self) -> Dict[str, object]:
        return {
            "tau1": self.tau1,
            "tau_max": self.tau_max,
            "final_norm": self.norms[-1] if self.norms else float("nan"),
            "worst_ratio": max(self.ratios) if self.ratios else 0.0,
            "converged": self.converged,
            "bound_holds": self.bound_holds,
            "horizon_change": self.horizon_change,
        }


class PicardSolver:
    """Iterates the fixed-point map on a geometric tau-grid.

    Args:
        params: (nu, alpha0, delta)
        config: Grid and iteration settings
        eigen: Unstable eigenpair on the Picard grid; computed when omitted
    """

    def __init__(
        self,
        params: Params,
        config: Optional[PicardConfig] = None,
        eigen: Optional[EigenData] = None,
    ):
        self.params = params
        self.config = config or PicardConfig()
        if eigen is None:
            op = LinearizedOperator.build(self.config.radius, self.config.step)
            eigen = eigenpairs(op)
        self.eigen = eigen
        self.clock = TimeMap(params)
        self.flow = LinearPropagator(eigen, self.clock.alpha1, self.clock.nu1)

    @property
    def operator(self) -> LinearizedOperator:
        return self.eigen.operator

    @property
    def nodes(self) -> np.ndarray:
        return self.operator.nodes

    def h2(self, vec: np.ndarray) -> float:
        """||f||_{H^2} of the scalar remainder carried in the first component."""
        n = self.operator.size
        scalar = np.concatenate([vec[:n], np.zeros(n, dtype=complex)])
        return self.flow.sobolev(scalar)[1]

    def weighted(self, taus: np.ndarray, states: np.ndarray) -> float:
        return float(max(self.h2(s) * tau**DECAY for tau, s in zip(taus, states)))

    def forcing(self, tau: float, state: np.ndarray, u: np.ndarray, r: np.ndarray):
        """(h0, c_plus, c_minus): P(F1 + r) and the P+/P- coefficients of F2 + r."""
        rho = self.nodes
        n = rho.size
        f = state[:n] / rho
        w4 = GroundStateKernel.w(rho) ** 4
        mod2 = np.abs(u) ** 2
        v1 = 3.0 * (w4 - mod2**2)
        v2 = 2.0 * (w4 - u**2 * mod2)
        total = u + f
        cubic = (
            -np.abs(total) ** 4 * total
            + mod2**2 * u
            + 3.0 * mod2**2 * f
            + 2.0 * u**2 * mod2 * np.conj(f)
        )
        scalar = rho * (v1 * f + v2 * np.conj(f) + cubic + r)
        base = np.concatenate([scalar, -np.conj(scalar)])
        eigen = self.eigen
        tilt = self.flow.l_apply(state) / tau
        unstable = eigen.project_plus(state) + eigen.project_minus(state)
        h0 = eigen.project(base + self.flow.l_apply(unstable) / tau)
        c_plus, c_minus = eigen.coefficients(base + tilt)
        return h0, c_plus, c_minus

    def _weights(self, delta: float) -> Tuple[float, float, float]:
        lam = self.eigen.lambda0
        x = lam * delta
        decay = np.exp(-x)
        if x < 1e-4:
            phi2 = delta * (0.5 - x / 3.0 + x * x / 8.0)
        else:
            phi2 = (1.0 - decay * (1.0 + x)) / (lam * x)
        phi1 = (1.0 - decay) / lam - phi2
        return decay, phi1, phi2

    def apply_map(
        self, taus: np.ndarray, states: np.ndarray, background: List[Tuple[np.ndarray, np.ndarray]]
    ) -> np.ndarray:
        """One application of J on the grid."""
        count = taus.size
        data = [self.forcing(tau, s, *bg) for tau, s, bg in zip(taus, states, background)]
        h0 = np.array([d[0] for d in data])
        c_plus = np.array([d[1] for d in data])
        c_minus = np.array([d[2] for d in data])

        free = np.zeros_like(states)
        substeps = self.config.substeps
        for j in range(count - 1, 0, -1):
            state = free[j]
            grid = np.linspace(taus[j], taus[j - 1], substeps + 1)
            for old, new in zip(grid[:-1], grid[1:]):
                weight = (0.5 * (old + new) - taus[j - 1]) / (taus[j] - taus[j - 1])
                source = weight * h0[j] + (1.0 - weight) * h0[j - 1]
                state = self.flow.step(state, float(old), float(new), source)
            free[j - 1] = state

        amp_plus = np.zeros(count, dtype=complex)
        for j in range(count - 2, -1, -1):
            decay, phi1, phi2 = self._weights(taus[j + 1] - taus[j])
            amp_plus[j] = decay * amp_plus[j + 1] + phi1 * c_plus[j] + phi2 * c_plus[j + 1]
        amp_minus = np.zeros(count, dtype=complex)
        for j in range(1, count):
            decay, phi1, phi2 = self._weights(taus[j] - taus[j - 1])
            amp_minus[j] = decay * amp_minus[j - 1] + phi1 * c_minus[j] + phi2 * c_minus[j - 1]

        eigen = self.eigen
        out = free + 1j * amp_plus[:, None] * eigen.zeta_plus - 1j * amp_minus[:, None] * (
            eigen.zeta_minus
        )
        n = self.operator.size
        # the spinor is (f, conj f) by construction
        out[:, n:] = np.conj(out[:, :n])
        return out

    def run(
        self,
        background: Background,
        tau1: float,
        tau_max: float,
        iterations: Optional[int] = None,
    ) -> PicardReport:
        """Iterate J from f = 0.

        Raises:
            DomainError: Unless 0 < tau1 < tau_max
        """
        if not 0.0 < tau1 < tau_max:
            raise DomainError("Picard grid needs 0 < tau1 < tau_max", {"tau1": tau1})
        iterations = iterations or self.config.iterations
        taus = np.geomspace(tau1, tau_max, self.config.tau_samples)
        samples = [background(float(tau)) for tau in taus]
        states = np.zeros((taus.size, 2 * self.operator.size), dtype=complex)
        norms: List[float] = []
        differences: List[float] = []
        for iteration in range(iterations):
            updated = self.apply_map(taus, states, samples)
            differences.append(self.weighted(taus, updated - states))
            states = updated
            norms.append(self.weighted(taus, states))
            logger.debug(
                "picard_iteration", iteration=iteration + 1, norm=norms[-1], diff=differences[-1]
            )
            if differences[-1] == 0.0:
                break
        ratios = [
            b / a if a > 0.0 else 0.0 for a, b in zip(differences[:-1], differences[1:])
        ]
        converged = all(r < self.config.contraction_gate for r in ratios)
        bound = all(self.h2(s) <= tau ** (-DECAY) for tau, s in zip(taus, states))
        report = PicardReport(
            tau1=tau1,
            tau_max=tau_max,
            taus=taus,
            norms=norms,
            differences=differences,
            ratios=ratios,
            converged=converged,
            bound_holds=bound,
            remainder=states,
        )
        logger.info("picard_finished", **report.summary())
        return report


def picard_remainder(
    approx: Optional[GlobalApprox],
    tau1: Optional[float] = None,
    tau_max: Optional[float] = None,
    iterations: Optional[int] = None,
    config: Optional[PicardConfig] = None,
    eigen: Optional[EigenData] = None,
    background: Optional[Background] = None,
    params: Optional[Params] = None,
) -> PicardReport:
    """Run the iteration for the glued approximation and report the horizon dependence.

    Without ``tau1`` the configured candidates are tried in increasing order and the first one
    whose successive-difference ratios pass the gate is kept. Candidates are raised to tau(T) and
    the horizon is capped at tau of the last time the approximation is valid. Without ``approx``
    the caller supplies ``background`` and ``params`` and the time window is unbounded.

    Returns:
        Report for the selected tau1 with ``horizon_change`` filled in

    Raises:
        DomainError: When the validity window leaves no room for a horizon
        ConfigurationError: Without ``approx`` when background or params is missing
    """
    config = config or PicardConfig()
    if approx is None:
        if background is None or params is None:
            raise ConfigurationError("an injected background needs explicit params")
        solver = PicardSolver(params, config, eigen)
        floor, ceiling = 0.0, float("inf")
    else:
        solver = PicardSolver(approx.params, config, eigen)
        background = background or glued_background(approx, solver.nodes)
        floor = solver.clock.tau(approx.t_min)
        ceiling = solver.clock.tau(approx.t_max)
    if tau1 is not None:
        candidates = [tau1]
    elif config.tau1 is not None:
        candidates = [config.tau1]
    else:
        candidates = sorted(config.tau1_candidates)
    candidates = [max(c, floor) for c in candidates]

    report: Optional[PicardReport] = None
    for start in candidates:
        horizon = min(tau_max or config.horizon_factor * start, ceiling)
        if horizon <= start:
            raise DomainError(
                "validity window leaves no room for the Picard horizon",
                {"tau1": start, "ceiling": ceiling},
            )
        report = solver.run(background, start, horizon, iterations)
        if report.converged:
            break
        logger.warning("picard_not_contracting", tau1=start, ratios=report.ratios)
    assert report is not None

    doubled = min(2.0 * report.tau_max, ceiling)
    change: Optional[float] = None
    if doubled > report.tau_max * (1.0 + 1e-9):
        longer = solver.run(background, report.tau1, doubled, iterations)
        base = report.norms[-1]
        change = abs(longer.norms[-1] - base) / base if base > 0.0 else 0.0
    else:
        logger.warning("picard_horizon_capped", tau_max=report.tau_max, ceiling=ceiling)
    return PicardReport(**{**report.__dict__, "horizon_change": change})
