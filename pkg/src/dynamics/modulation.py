"""Scale and phase of the ground-state bubble along a trajectory."""

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from ..numerics.fields import ComplexField
from ..profiles.ground_state import GroundStateKernel
from ..utils.config import EvolverConfig
from ..utils.errors import DomainError, NoBubbleError
from ..utils.logger import get_logger
from .evolver import Trajectory

logger = get_logger(__name__)


@dataclass(frozen=True)
class BubbleFit:
    """Best lambda^{1/2} W(lambda .) e^{i theta} for one state."""

    t: float
    scale: float
    phase: float
    misfit: float


@dataclass(frozen=True)
class ModulationFit:
    """Fitted exponents lambda = t^nu, alpha = alpha0 ln t.

    Attributes:
        nu: Slope of ln lambda against ln t
        alpha0: Slope of the unwrapped phase against ln t
        samples: Per-time bubble fits
        nu_residual: RMS residual of the scale regression
        alpha_residual: RMS residual of the phase regression
        window: (t_first, t_last) of the samples used
    """

    nu: float
    alpha0: float
    samples: List[BubbleFit]
    nu_residual: float
    alpha_residual: float
    window: Tuple[float, float]

    @property
    def worst_misfit(self) -> float:
        return max(s.misfit for s in self.samples)

    def to_rows(self) -> List[Dict[str, float]]:
        return [
            {"t": s.t, "lambda": s.scale, "theta": s.phase, "misfit": s.misfit}
            for s in self.samples
        ]

    def summary(self) -> Dict[str, float]:
        return {
            "nu": self.nu,
            "alpha0": self.alpha0,
            "nu_residual": self.nu_residual,
            "alpha_residual": self.alpha_residual,
            "worst_misfit": self.worst_misfit,
        }


def fit_bubble(psi: ComplexField, t: float, config: EvolverConfig) -> BubbleFit:
    """Minimize the relative L^2 misfit over ln lambda with the phase eliminated in closed form.

    The optimal phase for fixed lambda is arg <lambda^{1/2} W(lambda .), psi>, which turns the
    two-parameter problem into a bounded scalar minimization.
    """
    mask = psi.grid.mask((0.0, config.fit_radius))
    rho = psi.nodes[mask]
    weights = psi.grid.weights[mask]
    values = psi.values[mask]
    size = float(np.sum(weights * np.abs(values) ** 2))
    if size == 0.0:
        return BubbleFit(t=t, scale=float("nan"), phase=0.0, misfit=float("inf"))

    def pieces(log_scale: float) -> Tuple[float, complex]:
        scale = np.exp(log_scale)
        bubble = np.sqrt(scale) * GroundStateKernel.w(scale * rho)
        overlap = complex(np.sum(weights * np.conj(bubble) * values))
        return float(np.sum(weights * bubble**2)), overlap

    def misfit(log_scale: float) -> float:
        bubble_size, overlap = pieces(log_scale)
        return max(size + bubble_size - 2.0 * abs(overlap), 0.0) / size

    bound = config.fit_log_scale
    result = minimize_scalar(
        misfit, bounds=(-bound, bound), method="bounded", options={"xatol": 1e-10}
    )
    _, overlap = pieces(float(result.x))
    return BubbleFit(
        t=t,
        scale=float(np.exp(result.x)),
        phase=float(np.angle(overlap)),
        misfit=float(np.sqrt(result.fun)),
    )


def _regress(x: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
    if x.size < 2 or np.ptp(x) == 0.0:
        return 0.0, 0.0
    coeffs = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((np.polyval(coeffs, x) - y) ** 2)))
    return float(coeffs[0]), residual


def modulation_fit(
    traj: Trajectory,
    window: Optional[Tuple[float, float]] = None,
    config: Optional[EvolverConfig] = None,
) -> ModulationFit:
    """Fit lambda(t) and theta(t) at every sample, then nu and alpha0 by log-time regression.

    Args:
        traj: Trajectory dominated by one bubble
        window: Optional closed time window of samples to use
        config: Fit radius, scale bounds and the misfit gate

    Returns:
        Exponents, per-sample fits and regression residuals

    Raises:
        DomainError: When no sample with t > 0 lies in the window
        NoBubbleError: When some misfit exceeds the gate
    """
    config = config or EvolverConfig()
    lo, hi = window if window is not None else (-np.inf, np.inf)
    chosen = [
        (t, s) for t, s in zip(traj.times, traj.states) if lo <= t <= hi and t > 0.0
    ]
    if not chosen:
        raise DomainError("no positive sample time inside the fit window", {"window": window})
    samples = [fit_bubble(state, float(t), config) for t, state in chosen]
    worst = max(s.misfit for s in samples)
    if worst > config.bubble_gate:
        bad = next(s for s in samples if s.misfit == worst)
        raise NoBubbleError(
            "trajectory is not dominated by a modulated ground state",
            {"t": bad.t, "misfit": worst, "gate": config.bubble_gate},
        )
    log_t = np.log([s.t for s in samples])
    nu, nu_res = _regress(log_t, np.log([s.scale for s in samples]))
    alpha0, alpha_res = _regress(log_t, np.unwrap([s.phase for s in samples]))
    fit = ModulationFit(
        nu=nu,
        alpha0=alpha0,
        samples=samples,
        nu_residual=nu_res,
        alpha_residual=alpha_res,
        window=(samples[0].t, samples[-1].t),
    )
    logger.info("modulation_fitted", **fit.summary())
    return fit
