"""Backward propagator of i f_tau = P (H + l/tau) P f and its growth report.

With l = alpha1 sigma3 - i nu1 (1/2 + y.grad) acting on zeta, the reduced line form on
phi = rho zeta is l = alpha1 sigma3 - i nu1 (rho d/drho - 1/2). Steps are Crank-Nicolson with the
Hamiltonian frozen at the step midpoint; for l = 0 the Cayley map preserves
G1 = <H psi, sigma3 psi> exactly because sigma3 H is symmetric.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ..numerics.grid import line_first_difference
from ..utils.errors import DomainError, IntegratorError
from ..utils.logger import get_logger
from .operator import EigenData, LinearizedOperator

logger = get_logger(__name__)


@dataclass
class LinearPropagator:
    """Time-dependent linearized flow around the modulated ground state.

    Attributes:
        eigen: Unstable eigenpair, fixes the operator and the projector P
        alpha1: Phase-rotation coefficient of l
        nu1: Dilation coefficient of l
    """

    eigen: EigenData
    alpha1: float = 0.0
    nu1: float = 0.0

    def __post_init__(self) -> None:
        op = self.operator
        n = op.size
        dilation = sp.diags(op.nodes) @ line_first_difference(n, op.step, far="dirichlet")
        dilation = dilation - 0.5 * sp.identity(n)
        block = sp.block_diag([dilation, dilation])
        self._l = (self.alpha1 * op.sigma3_matrix() - 1j * self.nu1 * block).tocsc()
        self._h = op.matrix().tocsc().astype(complex)
        self._eye = sp.identity(2 * n, dtype=complex, format="csc")

    @property
    def operator(self) -> LinearizedOperator:
        return self.eigen.operator

    @property
    def strength(self) -> float:
        return abs(self.alpha1) + abs(self.nu1)

    def l_apply(self, f: np.ndarray) -> np.ndarray:
        return self._l @ f

    def hamiltonian(self, tau: float) -> sp.csc_matrix:
        if tau <= 0.0:
            raise DomainError("propagator time must be positive", {"tau": tau})
        return (self._h + self._l / tau).tocsc()

    def step(
        self,
        f: np.ndarray,
        tau_old: float,
        tau_new: float,
        source: Optional[np.ndarray] = None,
    ) -> np.ndarray:
        """One Crank-Nicolson step of i f' = H(tau) f + source from tau_old to tau_new.

        ``source`` is the forcing averaged over the step; P is applied to the result.

        Raises:
            IntegratorError: If the step produces non-finite values
        """
        delta = tau_old - tau_new
        ham = self.hamiltonian(0.5 * (tau_old + tau_new))
        lhs = (self._eye - 0.5j * delta * ham).tocsc()
        rhs = f + 0.5j * delta * (ham @ f)
        if source is not None:
            rhs = rhs + 1j * delta * source
        out = self.eigen.project(splu(lhs).solve(rhs))
        if not np.all(np.isfinite(out)):
            raise IntegratorError(
                "propagator step produced non-finite values", {"tau": tau_new, "step": delta}
            )
        return out

    def energies(self, f: np.ndarray) -> Tuple[float, float]:
        """(G1, G2) with G1 = <H f, sigma3 f> and G2 = <H^2 f, sigma3 H f> + G1."""
        op = self.operator
        s_matrix = op.symmetric_part()
        measure = 4.0 * np.pi * op.step
        g1 = float(measure * np.real(np.vdot(f, s_matrix @ f)))
        hf = op.apply(f)
        g2 = float(measure * np.real(np.vdot(hf, s_matrix @ hf))) + g1
        return g1, g2

    def sobolev(self, f: np.ndarray) -> Tuple[float, float]:
        """(||f||_{H^1}, ||f||_{H^2}) from the line samples."""
        op = self.operator
        n = op.size
        measure = 4.0 * np.pi * op.step
        mass = grad = lap = 0.0
        for part in (f[:n], f[n:]):
            second = op.second @ part
            mass += float(np.sum(np.abs(part) ** 2))
            grad += float(np.real(np.vdot(part, -second)))
            lap += float(np.sum(np.abs(second) ** 2))
        return float(np.sqrt(measure * (mass + grad))), float(
            np.sqrt(measure * (mass + grad + lap))
        )


@dataclass(frozen=True)
class PropagatorRun:
    """History of one backward run from s to s/ratio.

    Attributes:
        alpha1: Phase coefficient
        nu1: Dilation coefficient
        s: Start time
        taus: Decreasing time samples, taus[0] = s
        g1: G1 history
        g2: G2 history
        h1: H^1 norm history
        h2: H^2 norm history
        leakage: Max of |<f, sigma3 zeta+/->| along the run relative to ||f||
    """

    alpha1: float
    nu1: float
    s: float
    taus: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    leakage: float

    def _slope(self, values: np.ndarray, power: float = 1.0) -> float:
        x = np.log(self.s / self.taus)
        y = power * np.log(np.abs(values))
        return float(np.polyfit(x, y, 1)[0])

    def growth(self) -> Dict[str, float]:
        """Fitted exponents in ln(s/tau) of G1^{1/2}, H^1 and H^2."""
        return {
            "energy": self._slope(self.g1, 0.5),
            "h1": self._slope(self.h1),
            "h2": self._slope(self.h2),
        }

    def g1_drift(self) -> float:
        return float(np.max(np.abs(self.g1 - self.g1[0])) / abs(self.g1[0]))

    def energy_rate_constant(self) -> float:
        """max tau |dG1/dtau| / ((|alpha1| + |nu1|) G1) over the run; nan when l = 0."""
        strength = abs(self.alpha1) + abs(self.nu1)
        if strength == 0.0:
            return float("nan")
        rates = np.abs(np.diff(self.g1) / np.diff(self.taus))
        mid = 0.5 * (self.taus[1:] + self.taus[:-1])
        level = 0.5 * np.abs(self.g1[1:] + self.g1[:-1])
        return float(np.max(mid * rates / (strength * level)))

    def to_rows(self) -> List[Dict[str, float]]:
        return [
            {"tau": float(t), "H1": float(a), "H2": float(b), "G1": float(c), "G2": float(d)}
            for t, a, b, c, d in zip(self.taus, self.h1, self.h2, self.g1, self.g2)
        ]


def probe_spinor(op: LinearizedOperator, width: float = 3.0) -> np.ndarray:
    """Smooth conjugation-symmetric probe rho * e^{-rho^2/(2 width^2)}(1 + i/2, 1 - i/2)."""
    bump = op.nodes * np.exp(-0.5 * (op.nodes / width) ** 2)
    return op.stack((1.0 + 0.5j) * bump, (1.0 - 0.5j) * bump)


def propagator(
    eigen: EigenData,
    f: np.ndarray,
    s: float,
    tau: float,
    params: Tuple[float, float] = (0.0, 0.0),
    steps: int = 400,
) -> PropagatorRun:
    """Integrate backward from s to tau on a geometric grid and record norms.

    Args:
        eigen: Unstable eigenpair of the operator
        f: Initial line vector at time s; P is applied before the first step
        s: Start time
        tau: Final time, 0 < tau <= s
        params: (alpha1, nu1)
        steps: Number of steps

    Returns:
        Norm and energy history

    Raises:
        DomainError: Unless 0 < tau <= s
        IntegratorError: On a non-finite step
    """
    if not 0.0 < tau <= s:
        raise DomainError("propagator needs 0 < tau <= s", {"tau": tau, "s": s})
    flow = LinearPropagator(eigen, *params)
    taus = np.geomspace(s, tau, steps + 1)
    state = eigen.project(np.asarray(f, dtype=complex))
    scale = eigen.operator.norm(state)
    history: Dict[str, List[float]] = {"g1": [], "g2": [], "h1": [], "h2": []}
    leakage = 0.0

    def record(vec: np.ndarray) -> None:
        nonlocal leakage
        g1, g2 = flow.energies(vec)
        h1, h2 = flow.sobolev(vec)
        for key, value in zip(("g1", "g2", "h1", "h2"), (g1, g2, h1, h2)):
            history[key].append(value)
        plus, minus = eigen.coefficients(vec)
        leakage = max(leakage, abs(plus), abs(minus))

    record(state)
    for old, new in zip(taus[:-1], taus[1:]):
        state = flow.step(state, float(old), float(new))
        record(state)
    run = PropagatorRun(
        alpha1=params[0],
        nu1=params[1],
        s=s,
        taus=taus,
        g1=np.array(history["g1"]),
        g2=np.array(history["g2"]),
        h1=np.array(history["h1"]),
        h2=np.array(history["h2"]),
        leakage=leakage / scale,
    )
    logger.info(
        "propagator_run",
        alpha1=params[0],
        nu1=params[1],
        ratio=s / tau,
        g1_drift=run.g1_drift(),
        **run.growth(),
    )
    return run


def growth_constant(runs: Sequence[PropagatorRun]) -> float:
    """Smallest C with every growth exponent <= C (|alpha1| + |nu1|) over runs with l != 0."""
    ratios = [
        max(run.growth().values()) / (abs(run.alpha1) + abs(run.nu1))
        for run in runs
        if abs(run.alpha1) + abs(run.nu1) > 0.0
    ]
    return float(max(ratios)) if ratios else float("nan")
