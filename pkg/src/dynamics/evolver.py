"""Strang-split radial integrator for i psi_t = -Laplacian psi - |psi|^4 psi.

The state is carried as phi = rho psi on nodes rho_j = j*h. Linear half-steps solve
phi_t = i phi'' - sigma phi by Crank-Nicolson with the Neumann line operator; the nonlinear step
is the exact rotation phi -> phi exp(i |psi|^4 dt). Without sponge both parts conserve the mass
4 pi h sum |phi|^2.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu
from tqdm import tqdm

from ..numerics.fields import ComplexField, norm
from ..numerics.grid import RadialGrid, line_second_difference, make_grid, uniform_line
from ..profiles.ground_state import energy_functional
from ..utils.config import EvolverConfig, GridSpec
from ..utils.errors import BlowUpError, DomainError, NumericError
from ..utils.logger import get_logger, progress_enabled

logger = get_logger(__name__)


@dataclass(frozen=True)
class Trajectory:
    """Samples of one evolution.

    Attributes:
        times: Strictly increasing sample times
        states: Fields on a shared grid
        energy: E(psi) per sample
        mass: ||psi||_{L^2}^2 per sample
        sup: sup |psi| per sample
        metadata: Scheme settings (dt, step, radius, sponge)
    """

    times: np.ndarray
    states: List[ComplexField]
    energy: np.ndarray
    mass: np.ndarray
    sup: np.ndarray
    metadata: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.times) != len(self.states):
            raise DomainError("times and states differ in length")
        if np.any(np.diff(self.times) <= 0.0):
            raise DomainError("trajectory times must increase strictly")

    @classmethod
    def from_states(cls, times, states: List[ComplexField]) -> "Trajectory":
        """Trajectory from given fields; diagnostics are computed on the fields' grid."""
        return cls(
            times=np.asarray(times, dtype=float),
            states=list(states),
            energy=np.array([energy_functional(s) for s in states]),
            mass=np.array([norm(s, "L2") ** 2 for s in states]),
            sup=np.array([s.sup() for s in states]),
        )

    @property
    def grid(self) -> RadialGrid:
        return self.states[0].grid

    def energy_drift_rate(self) -> float:
        """max |E(t) - E(t0)| / (t_end - t0)."""
        span = self.times[-1] - self.times[0]
        if span <= 0.0:
            return 0.0
        return float(np.max(np.abs(self.energy - self.energy[0])) / span)

    def to_rows(self) -> List[Dict[str, float]]:
        return [
            {"t": float(t), "E": float(e), "L2": float(np.sqrt(m)), "sup": float(s)}
            for t, e, m, s in zip(self.times, self.energy, self.mass, self.sup)
        ]


class RadialEvolver:
    """Fixed-step integrator on a uniform line grid.

    Args:
        config: Grid, step and sponge settings
    """

    def __init__(self, config: Optional[EvolverConfig] = None):
        self.config = config or EvolverConfig()
        cfg = self.config
        count = int(round(cfg.radius / cfg.step))
        if count < 20:
            raise DomainError("evolver grid too short", {"radius": cfg.radius, "step": cfg.step})
        self.nodes = uniform_line(count, cfg.step)
        self.step_size = cfg.step
        self.second = line_second_difference(count, cfg.step, far="neumann").tocsc()
        self.sponge = self._sponge_profile()
        self._solvers: Dict[float, tuple] = {}
        self._grid: Optional[RadialGrid] = None

    def _sponge_profile(self) -> np.ndarray:
        cfg = self.config
        radius = self.nodes[-1]
        start = (1.0 - cfg.sponge_width) * radius
        profile = np.zeros_like(self.nodes)
        if cfg.sponge_width > 0.0 and cfg.sponge_strength > 0.0:
            outer = self.nodes > start
            ramp = (self.nodes[outer] - start) / (radius - start)
            profile[outer] = cfg.sponge_strength * ramp**2
        return profile

    @property
    def grid(self) -> RadialGrid:
        if self._grid is None:
            n = self.nodes.size
            self._grid = make_grid(
                GridSpec.uniform(end=n * self.step_size, count=n, start=self.step_size)
            )
        return self._grid

    def _factors(self, dt: float):
        """Factorized half-step pair for a given dt (negative dt runs backward).

        The sponge damps with |dt| so it absorbs in both time directions.
        """
        if dt not in self._solvers:
            n = self.nodes.size
            dispersion = 0.25 * dt * 1j * self.second
            damping = 0.25 * abs(dt) * sp.diags(self.sponge)
            eye = sp.identity(n, dtype=complex, format="csc")
            lhs = (eye - dispersion + damping).tocsc()
            rhs = (eye + dispersion - damping).tocsc()
            self._solvers[dt] = (splu(lhs), rhs)
        return self._solvers[dt]

    def to_line(self, psi: ComplexField) -> np.ndarray:
        """phi = rho psi on the evolver nodes."""
        if psi.grid.size == self.nodes.size and np.allclose(psi.nodes, self.nodes):
            values = psi.values
        else:
            values = psi.interpolate(self.nodes)
        return self.nodes * values

    def from_line(self, phi: np.ndarray) -> ComplexField:
        return ComplexField(self.grid, phi / self.nodes, "none")

    def _half(self, phi: np.ndarray, dt: float) -> np.ndarray:
        solver, rhs = self._factors(dt)
        return solver.solve(rhs @ phi)

    def advance(self, phi: np.ndarray, dt: float, t: float = 0.0) -> np.ndarray:
        """One Strang step of the line state.

        Raises:
            BlowUpError: When sup |psi| exceeds the ceiling
        """
        phi = self._half(phi, dt)
        psi_abs = np.abs(phi) / self.nodes
        phi = phi * np.exp(1j * psi_abs**4 * dt)
        phi = self._half(phi, dt)
        peak = float(np.max(np.abs(phi) / self.nodes))
        if not np.isfinite(peak) or peak > self.config.blowup_ceiling:
            raise BlowUpError(
                "solution amplitude exceeded the ceiling",
                {"t": t, "sup": peak, "ceiling": self.config.blowup_ceiling},
            )
        return phi

    def step(self, psi: ComplexField, dt: Optional[float] = None) -> ComplexField:
        """One split step of a field; the result lives on the evolver grid."""
        phi = self.advance(self.to_line(psi), dt if dt is not None else self.config.dt)
        return self.from_line(phi)

    def energy(self, phi: np.ndarray) -> float:
        """4 pi int |phi'|^2 - (4 pi / 3) int |phi|^6 rho^{-4}."""
        h = self.step_size
        kinetic = float(np.real(np.vdot(phi, -(self.second @ phi))))
        potential = float(np.sum(np.abs(phi) ** 6 / self.nodes**4))
        return 4.0 * np.pi * h * (kinetic - potential / 3.0)

    def mass(self, phi: np.ndarray) -> float:
        return float(4.0 * np.pi * self.step_size * np.sum(np.abs(phi) ** 2))

    def sup(self, phi: np.ndarray) -> float:
        return float(np.max(np.abs(phi) / self.nodes))


def evolve(
    psi0: ComplexField,
    t0: float,
    t1: float,
    controls: Optional[EvolverConfig] = None,
    evolver: Optional[RadialEvolver] = None,
    dt: Optional[float] = None,
) -> Trajectory:
    """Fixed-step evolution from t0 to t1 with samples every ``sample_every`` steps.

    Args:
        psi0: Initial field, interpolated onto the evolver grid when needed
        t0: Start time
        t1: End time; t1 < t0 integrates backward
        controls: Evolver settings, ignored when ``evolver`` is given
        evolver: Prepared integrator
        dt: Step size override; the step is shrunk to divide the span evenly

    Returns:
        Trajectory with energy, mass and sup-norm at every sample

    Raises:
        DomainError: When t1 equals t0
        BlowUpError: Propagated from the step
    """
    if t1 == t0:
        raise DomainError("evolution span is empty", {"t0": t0})
    evolver = evolver or RadialEvolver(controls)
    cfg = evolver.config
    span = t1 - t0
    nominal = abs(dt if dt is not None else cfg.dt)
    count = max(int(np.ceil(abs(span) / nominal - 1e-9)), 1)
    step = span / count
    phi = evolver.to_line(psi0)

    times, states, energy, mass, sup = [], [], [], [], []

    def record(t: float, state: np.ndarray) -> None:
        if not np.all(np.isfinite(state)):
            raise NumericError("non-finite state", {"t": t})
        times.append(t)
        states.append(evolver.from_line(state))
        energy.append(evolver.energy(state))
        mass.append(evolver.mass(state))
        sup.append(evolver.sup(state))

    record(t0, phi)
    for i in tqdm(range(1, count + 1), desc="evolve", disable=not progress_enabled()):
        t = t0 + i * step
        try:
            phi = evolver.advance(phi, step, t)
        except BlowUpError as e:
            e.details["last_time"] = times[-1]
            logger.error("evolution_blew_up", **e.details)
            raise
        if i % cfg.sample_every == 0 or i == count:
            record(t, phi)

    order = np.argsort(times)
    trajectory = Trajectory(
        times=np.asarray(times)[order],
        states=[states[i] for i in order],
        energy=np.asarray(energy)[order],
        mass=np.asarray(mass)[order],
        sup=np.asarray(sup)[order],
        metadata={
            "dt": float(step),
            "step": evolver.step_size,
            "radius": float(evolver.nodes[-1]),
            "sponge_width": cfg.sponge_width,
            "steps": count,
        },
    )
    logger.info(
        "evolution_finished",
        t0=t0,
        t1=t1,
        steps=count,
        energy_drift=trajectory.energy_drift_rate(),
    )
    return trajectory


def time_reversal_defect(psi0: ComplexField, t: float, evolver: RadialEvolver) -> float:
    """Relative H^1 distance between psi0 and the forward-then-backward evolution.

    The sponge absorbs in both directions, so the defect is only small when it is off.
    """
    forward = evolve(psi0, 0.0, t, evolver=evolver)
    back = evolve(forward.states[-1], t, 0.0, evolver=evolver)
    start = evolver.from_line(evolver.to_line(psi0))
    final = back.states[0]
    return norm(final - start, "H1") / norm(start, "H1")


def scaling_defect(
    profile: Callable[[np.ndarray], np.ndarray],
    t: float,
    evolver: RadialEvolver,
    scale: float = 2.0,
) -> float:
    """Relative L^2 defect of the scaling law psi_s(x, t) = s^{1/2} psi(s x, s^2 t).

    The comparison is restricted to rho <= R / (2 scale) so both runs stay away from the sponge.
    """
    grid = evolver.grid
    base = ComplexField(grid, profile(grid.nodes), "none")
    scaled = ComplexField(grid, np.sqrt(scale) * profile(scale * grid.nodes), "none")
    long_run = evolve(base, 0.0, scale**2 * t, evolver=evolver).states[-1]
    short_run = evolve(scaled, 0.0, t, evolver=evolver).states[-1]
    window = (0.0, grid.r_max / (2.0 * scale))
    inside = grid.nodes[grid.mask(window)]
    expected = np.sqrt(scale) * long_run.interpolate(scale * inside)
    got = short_run.values[grid.mask(window)]
    weights = grid.weights[grid.mask(window)]
    diff = np.sqrt(np.sum(weights * np.abs(got - expected) ** 2))
    return float(diff / np.sqrt(np.sum(weights * np.abs(expected) ** 2)))


def center_tracking(traj: Trajectory, nu: float) -> Dict[str, float]:
    """Deviation of the center amplitude from the bubble law |psi(0, t)| ~ t^{nu/2}.

    The innermost sample stands in for rho = 0 and the law is normalized at the first time.

    Returns:
        ``worst`` relative deviation over the samples and the fitted ``slope`` of the center
        amplitude against ln t (expected nu/2)
    """
    center = np.array([abs(s.values[0]) for s in traj.states])
    if center[0] == 0.0:
        raise DomainError("center amplitude vanishes at the first sample")
    law = center[0] * (traj.times / traj.times[0]) ** (0.5 * nu)
    worst = float(np.max(np.abs(center / law - 1.0)))
    slope = float(np.polyfit(np.log(traj.times), np.log(center), 1)[0])
    return {"worst": worst, "slope": slope, "expected_slope": 0.5 * nu}


def dispersive_decay(traj: Trajectory) -> float:
    """sup |psi(t_end)| / sup |psi(t_0)|; below 1 when small data disperse."""
    return float(traj.sup[-1] / traj.sup[0])
