"""Jost solutions, scattering coefficients and the odd solution e(rho, k).

The reduced system is f'' = A f with A = [[V1 - k^2, V2], [V2, V1 + k^2]], V1 = -3W^4,
V2 = -2W^4, and the bilinear Wronskian w(f, g) = f'.g - f.g' is constant for any two solutions.

J3 ~ e^{-k rho}(0, 1) is integrated inward through its amplitude chi3 = e^{k rho} f3, which is
stable in that direction. J1 ~ e^{ik rho}(1, 0) is not determined by its behaviour at infinity
alone (J1 + c J3 has the same limit), so it is built from the substitution
f1 = (z1, 0) + phi f3 with phi' = z2 / f3_2: (z1, z1', z2) solve a system that is stable inward,
and phi is fixed by phi(R) = -C0, where C0 makes phi vanish at infinity when k = 0. Inside the
reduction radius R, where chi3_2 may vanish, J1 is continued by the plain system. J4 ~ e^{k rho}
is integrated outward through its amplitude and is only defined modulo J1, J2 and J3.

Heads at the outer radius carry the first Born correction, integrated exactly against the
closed-form potential with Fourier-weighted quadrature.
"""

import warnings
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import IntegrationWarning, OdeSolution, quad, solve_ivp
from tqdm import tqdm

from ..utils.errors import DomainError, DomainSizeError, IntegratorError
from ..utils.logger import get_logger, progress_enabled

logger = get_logger(__name__)

Moments = Tuple[float, float]


def wronskian(f: np.ndarray, df: np.ndarray, g: np.ndarray, dg: np.ndarray) -> np.ndarray:
    """w(f, g) = f'.g - f.g' over the last axis (no conjugation)."""
    return np.sum(df * g - f * dg, axis=-1)


def _moments(amplitude: Callable[[float], float], omega: float, limit: int = 200) -> Moments:
    """(int_0^inf a(u) cos(omega u) du, int_0^inf a(u) sin(omega u) du)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        if omega == 0.0:
            value, _ = quad(amplitude, 0.0, np.inf, limit=limit)
            return value, 0.0
        cos_part, _ = quad(amplitude, 0.0, np.inf, weight="cos", wvar=omega, limlst=100)
        sin_part, _ = quad(amplitude, 0.0, np.inf, weight="sin", wvar=omega, limlst=100)
    return cos_part, sin_part


def _plain(integrand: Callable[[float], float], limit: int = 200) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        value, _ = quad(integrand, 0.0, np.inf, limit=limit)
    return value


@dataclass(frozen=True)
class JostSolution:
    """Samples of one Jost solution and its origin data.

    Attributes:
        which: J1, J2, J3 or J4
        k: Momentum
        nodes: Sample radii
        values: f(nodes), shape (n, 2)
        slopes: f'(nodes), shape (n, 2)
        origin: (f(0), f'(0))
    """

    which: str
    k: float
    nodes: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    origin: Tuple[np.ndarray, np.ndarray]

    def conj(self) -> "JostSolution":
        """J2 = conj J1 for real k."""
        name = {"J1": "J2", "J2": "J1"}.get(self.which, self.which)
        return JostSolution(
            which=name,
            k=self.k,
            nodes=self.nodes,
            values=np.conj(self.values),
            slopes=np.conj(self.slopes),
            origin=(np.conj(self.origin[0]), np.conj(self.origin[1])),
        )

    def reflected_origin(self) -> Tuple[np.ndarray, np.ndarray]:
        """(g(0), g'(0)) of g(rho) = f(-rho)."""
        return self.origin[0], -self.origin[1]

    def wronskian_with(self, other: "JostSolution") -> np.ndarray:
        return wronskian(self.values, self.slopes, other.values, other.slopes)

    def origin_wronskian(self, other: "JostSolution") -> complex:
        return complex(wronskian(self.origin[0], self.origin[1], other.origin[0], other.origin[1]))


@dataclass
class JostSolver:
    """Integrates J1, J3 and J4 on [0, radius].

    Attributes:
        radius: Outer radius where the Born heads are imposed
        reduction_radius: R below which J1 is continued by the plain system
        potential_scale: Multiplier of V, 0 gives the free solutions
        rtol: Relative tolerance of the integrator
        atol: Absolute tolerance of the integrator
    """

    radius: float = 1000.0
    reduction_radius: float = 8.0
    potential_scale: float = 1.0
    rtol: float = 1e-10
    atol: float = 1e-13
    _c0: Optional[float] = field(default=None, init=False, repr=False)

    def v1(self, rho):
        return -3.0 * self.potential_scale * (1.0 + np.asarray(rho) ** 2 / 3.0) ** -2

    def v2(self, rho):
        return -2.0 * self.potential_scale * (1.0 + np.asarray(rho) ** 2 / 3.0) ** -2

    def _integrate(self, rhs, span: Tuple[float, float], y0: np.ndarray, label: str) -> OdeSolution:
        result = solve_ivp(
            rhs,
            span,
            np.asarray(y0, dtype=complex),
            method="DOP853",
            rtol=self.rtol,
            atol=self.atol,
            dense_output=True,
        )
        if not result.success:
            raise IntegratorError(
                f"{label} integration failed: {result.message}", {"span": list(span)}
            )
        return result.sol

    def _chi3_head(self, k: float) -> np.ndarray:
        """chi3 and chi3' at the outer radius from the first Born term."""
        big = self.radius
        if self.potential_scale == 0.0:
            return np.array([0.0, 1.0, 0.0, 0.0], dtype=complex)

        def damped_v2(u: float) -> float:
            return float(np.exp(-k * u) * self.v2(big + u))

        if k > 0.0:
            c, s = _moments(damped_v2, k)
            delta1, ddelta1 = s / k, -(c - s)
        else:
            delta1 = _plain(lambda u: u * float(self.v2(big + u)))
            ddelta1 = -_plain(lambda u: float(self.v2(big + u)))
        if k > 0.0:
            delta2 = _plain(lambda u: -np.expm1(-2.0 * k * u) / (2.0 * k) * float(self.v1(big + u)))
        else:
            delta2 = _plain(lambda u: u * float(self.v1(big + u)))
        ddelta2 = -_plain(lambda u: np.exp(-2.0 * k * u) * float(self.v1(big + u)))
        return np.array([delta1, 1.0 + delta2, ddelta1, ddelta2], dtype=complex)

    def _z_head(self, k: float, chi: np.ndarray) -> np.ndarray:
        """(z1, z1', z2) at the outer radius from the first Born term."""
        big = self.radius
        wave = np.exp(1j * k * big)
        if self.potential_scale == 0.0:
            return np.array([wave, 1j * k * wave, 0.0], dtype=complex)

        def v1_tail(u: float) -> float:
            return float(self.v1(big + u))

        if k > 0.0:
            c1, s1 = _moments(v1_tail, 2.0 * k)
            total = _plain(v1_tail)
            z1 = wave * (1.0 + s1 / (2.0 * k) + 1j * (total - c1) / (2.0 * k))
            dz1 = 1j * k * wave - wave * 0.5 * (total + c1 + 1j * s1)
            c2, s2 = _moments(lambda u: float(np.exp(-k * u) * self.v2(big + u)), k)
            z2 = -wave * (c2 + 1j * s2)
        else:
            z1 = 1.0 + _plain(lambda u: u * v1_tail(u))
            dz1 = -_plain(v1_tail) + 0.0j
            z2 = -_plain(lambda u: float(self.v2(big + u))) + 0.0j
        return np.array([z1, dz1, z2], dtype=complex)

    def _chi3_rhs(self, k: float):
        def rhs(rho, y):
            v1, v2 = self.v1(rho), self.v2(rho)
            chi1, chi2, d1, d2 = y
            return [
                d1,
                d2,
                2.0 * k * d1 + (v1 - 2.0 * k * k) * chi1 + v2 * chi2,
                2.0 * k * d2 + v2 * chi1 + v1 * chi2,
            ]

        return rhs

    def _joint_rhs(self, k: float):
        chi_rhs = self._chi3_rhs(k)

        def rhs(rho, y):
            chi1, chi2, d1, d2, z1, dz1, z2 = y
            v1, v2 = self.v1(rho), self.v2(rho)
            v11 = v1 - v2 * chi1 / chi2
            v12 = 2.0 * (chi1 * d2 - d1 * chi2) / chi2**2
            v22 = -d2 / chi2
            return chi_rhs(rho, y[:4]) + [
                dz1,
                -k * k * z1 + v11 * z1 + v12 * z2,
                k * z2 + v2 * z1 + v22 * z2,
            ]

        return rhs

    def _plain_rhs(self, k: float):
        def rhs(rho, y):
            v1, v2 = self.v1(rho), self.v2(rho)
            f1, f2, d1, d2 = y
            return [d1, d2, (v1 - k * k) * f1 + v2 * f2, v2 * f1 + (v1 + k * k) * f2]

        return rhs

    def _outer_pass(self, k: float) -> OdeSolution:
        """chi3 together with (z1, z1', z2) on [R, radius], integrated inward."""
        head = self._chi3_head(k)
        start = np.concatenate([head, self._z_head(k, head)])
        sol = self._integrate(self._joint_rhs(k), (self.radius, self.reduction_radius), start, "J1")
        probe = np.linspace(self.reduction_radius, self.radius, 2001)
        chi2 = sol(probe)[1].real
        if np.any(chi2 <= 0.0):
            raise DomainSizeError(
                "chi3 second component vanishes beyond the reduction radius",
                {"k": k, "rho": float(probe[np.argmax(chi2 <= 0.0)])},
            )
        return sol

    def _q_pass(self, k: float, outer: OdeSolution) -> OdeSolution:
        def rhs(rho, y):
            state = outer(rho)
            return [-k * y[0] + state[6] / state[1]]

        return self._integrate(rhs, (self.reduction_radius, self.radius), np.zeros(1), "phase")

    @property
    def c0(self) -> float:
        """phi(R) at k = 0 with phi vanishing at infinity."""
        if self._c0 is None:
            outer = self._outer_pass(0.0)
            q = self._q_pass(0.0, outer)
            tail = outer(self.radius)[6].real * self.radius / 2.0
            self._c0 = float(q(self.radius)[0].real + tail)
            logger.debug("jost_normalization", c0=self._c0)
        return self._c0

    def pair(self, k: float, nodes: Optional[Sequence[float]] = None) -> Tuple[JostSolution, ...]:
        """J1 and J3 at momentum k >= 0 sampled on nodes within [0, radius].

        Raises:
            DomainError: For k < 0 or nodes outside [0, radius]
            DomainSizeError: When chi3_2 vanishes beyond the reduction radius
        """
        if k < 0.0:
            raise DomainError("momentum must be non-negative", {"k": k})
        rho = np.atleast_1d(np.asarray(nodes if nodes is not None else [], dtype=float))
        if rho.size and (rho.min() < 0.0 or rho.max() > self.radius * (1.0 + 1e-12)):
            raise DomainError("nodes outside the Jost domain", {"radius": self.radius})
        big_r = self.reduction_radius
        c0 = self.c0
        outer = self._outer_pass(k)
        q_sol = self._q_pass(k, outer)

        def outer_values(r: np.ndarray) -> Tuple[np.ndarray, ...]:
            state = outer(r)
            chi, dchi = state[0:2].T, state[2:4].T
            z1, dz1, z2 = state[4], state[5], state[6]
            q = q_sol(r)[0]
            amp = (q - c0 * np.exp(-k * r))[:, None]
            f1 = amp * chi
            f1[:, 0] += z1
            df1 = (z2 / state[1])[:, None] * chi + amp * (dchi - k * chi)
            df1[:, 0] += dz1
            decay = np.exp(-k * r)[:, None]
            return f1, df1, decay * chi, decay * (dchi - k * chi)

        at_r = outer_values(np.array([big_r]))
        inner1 = self._integrate(
            self._plain_rhs(k),
            (big_r, 0.0),
            np.concatenate([at_r[0][0], at_r[1][0]]),
            "J1 core",
        )
        inner3 = self._integrate(self._chi3_rhs(k), (big_r, 0.0), outer(big_r)[:4], "J3 core")

        def sample(r: np.ndarray) -> Tuple[np.ndarray, ...]:
            out = [np.zeros((r.size, 2), dtype=complex) for _ in range(4)]
            far = r >= big_r
            if np.any(far):
                for slot, part in zip(out, outer_values(r[far])):
                    slot[far] = part
            near = ~far
            if np.any(near):
                state1 = inner1(r[near])
                out[0][near] = state1[0:2].T
                out[1][near] = state1[2:4].T
                state3 = inner3(r[near])
                decay = np.exp(-k * r[near])[:, None]
                out[2][near] = decay * state3[0:2].T
                out[3][near] = decay * (state3[2:4].T - k * state3[0:2].T)
            return tuple(out)

        origin = sample(np.zeros(1))
        f1, df1, f3, df3 = sample(rho)
        j1 = JostSolution("J1", k, rho, f1, df1, (origin[0][0], origin[1][0]))
        j3 = JostSolution("J3", k, rho, f3, df3, (origin[2][0], origin[3][0]))
        return j1, j3

    def j4(self, k: float, nodes: Optional[Sequence[float]] = None) -> JostSolution:
        """Growing solution e^{k rho}(0, 1) + ..., modulo J1, J2, J3.

        Raises:
            DomainError: For k <= 0
        """
        if k <= 0.0:
            raise DomainError("J4 needs a positive momentum", {"k": k})

        def rhs(rho, y):
            v1, v2 = self.v1(rho), self.v2(rho)
            chi1, chi2, d1, d2 = y
            return [
                d1,
                d2,
                -2.0 * k * d1 + (v1 - 2.0 * k * k) * chi1 + v2 * chi2,
                -2.0 * k * d2 + v2 * chi1 + v1 * chi2,
            ]

        sol = self._integrate(rhs, (0.0, self.radius), np.array([0.0, 1.0, 0.0, k]), "J4")
        correction = 1.0 - self.potential_scale * 9.0 / (2.0 * k * self.radius**3)
        scale = sol(self.radius)[1] * correction
        rho = np.atleast_1d(np.asarray(nodes if nodes is not None else [], dtype=float))

        def sample(r: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
            state = sol(r) / scale
            grow = np.exp(k * r)[:, None]
            chi, dchi = state[0:2].T, state[2:4].T
            return grow * chi, grow * (dchi + k * chi)

        f0, d0 = sample(np.zeros(1))
        values, slopes = sample(rho) if rho.size else (np.zeros((0, 2)), np.zeros((0, 2)))
        return JostSolution("J4", k, rho, values, slopes, (f0[0], d0[0]))


def jost_solve(
    which: str, k: float, nodes: Sequence[float], solver: Optional[JostSolver] = None
) -> JostSolution:
    """One Jost solution J1, J2, J3 or J4 on the given radii.

    Raises:
        DomainError: For an unknown name or an invalid momentum
    """
    solver = solver or JostSolver()
    if which == "J4":
        return solver.j4(k, nodes)
    if which not in ("J1", "J2", "J3"):
        raise DomainError(f"unknown Jost solution {which!r}")
    j1, j3 = solver.pair(k, nodes)
    return {"J1": j1, "J2": j1.conj(), "J3": j3}[which]


@dataclass(frozen=True)
class ScatteringPoint:
    """Scattering data at one momentum.

    Attributes:
        k: Momentum
        d: Matrix Wronskian D(k) = W(F, G), F = (J1, J3), G their reflections
        s: D^{-T}(2ik, 0)
        r: (r1, r2) with F s = r1 g1 + g2 + r2 g3
        r2_residual: Relative misfit of the least-squares r2
        wronskians: w(J1,J2), w(J1,J3), w(J2,J3) and optionally w(J3,J4)
        drift: Max relative variation of w(J1, J2) over rho in [1, radius/2]
    """

    k: float
    d: np.ndarray
    s: np.ndarray
    r: np.ndarray
    r2_residual: float
    wronskians: Dict[str, complex]
    drift: float

    @property
    def a(self) -> np.ndarray:
        return self.r - self.s

    def unitarity(self) -> Tuple[float, float]:
        """(|s1|^2 + |r1|^2 - 1, |r1 conj s1 + conj r1 s1|)."""
        s1, r1 = self.s[0], self.r[0]
        first = abs(s1) ** 2 + abs(r1) ** 2 - 1.0
        second = abs(r1 * np.conj(s1) + np.conj(r1) * s1)
        return float(first), float(second)

    def odd_solution(self, j1: JostSolution, j3: JostSolution) -> Tuple[np.ndarray, np.ndarray]:
        """e = a1 J1 + J2 + a2 J3 and its slope on the nodes of j1."""
        a1, a2 = self.a
        values = a1 * j1.values + np.conj(j1.values) + a2 * j3.values
        slopes = a1 * j1.slopes + np.conj(j1.slopes) + a2 * j3.slopes
        return values, slopes

    def to_row(self) -> Dict[str, float]:
        row: Dict[str, float] = {"k": self.k}
        for name, value in (
            ("s1", self.s[0]),
            ("s2", self.s[1]),
            ("r1", self.r[0]),
            ("r2", self.r[1]),
            ("a1", self.a[0]),
            ("a2", self.a[1]),
        ):
            row[f"{name}_re"], row[f"{name}_im"] = float(value.real), float(value.imag)
        for i in range(2):
            for j in range(2):
                row[f"D{i + 1}{j + 1}_re"] = float(self.d[i, j].real)
                row[f"D{i + 1}{j + 1}_im"] = float(self.d[i, j].imag)
        for name, value in self.wronskians.items():
            row[f"w_{name}_re"], row[f"w_{name}_im"] = float(value.real), float(value.imag)
        u1, u2 = self.unitarity()
        row.update({"unitarity_modulus": u1, "unitarity_phase": u2})
        row.update({"r2_residual": self.r2_residual, "wronskian_drift": self.drift})
        return row


def scattering_point(
    solver: JostSolver, k: float, nodes: Optional[Sequence[float]] = None, with_j4: bool = False
) -> Tuple[ScatteringPoint, JostSolution, JostSolution]:
    """D, s, r and a at one k > 0, with J1 and J3 sampled on nodes.

    Raises:
        DomainError: For k <= 0, where D vanishes
    """
    if k <= 0.0:
        raise DomainError("scattering data need k > 0", {"k": k})
    check = np.linspace(1.0, solver.radius / 2.0, 40)
    rho = np.asarray(nodes, dtype=float) if nodes is not None else np.zeros(0)
    j1, j3 = solver.pair(k, np.concatenate([check, rho]))
    f0 = np.stack([j1.origin[0], j3.origin[0]], axis=1)
    d0 = np.stack([j1.origin[1], j3.origin[1]], axis=1)
    d = d0.T @ f0 + f0.T @ d0
    s = np.linalg.solve(d.T, np.array([2j * k, 0.0]))
    if np.linalg.cond(d) > 1e12:
        logger.warning("scattering_matrix_near_singular", k=k, cond=float(np.linalg.cond(d)))

    g2 = (np.conj(j1.origin[0]), -np.conj(j1.origin[1]))
    w_g2_f1 = complex(wronskian(g2[0], g2[1], j1.origin[0], j1.origin[1]))
    w_g2_f3 = complex(wronskian(g2[0], g2[1], j3.origin[0], j3.origin[1]))
    r1 = s[0] * w_g2_f1 / (2j * k) + s[1] * w_g2_f3 / (2j * k)

    big_f = (s[0] * j1.origin[0] + s[1] * j3.origin[0], s[0] * j1.origin[1] + s[1] * j3.origin[1])
    g1 = j1.reflected_origin()
    g3 = j3.reflected_origin()
    rhs = np.concatenate([big_f[0] - r1 * g1[0] - g2[0], big_f[1] - r1 * g1[1] - g2[1]])
    column = np.concatenate([g3[0], g3[1]])
    r2 = complex(np.vdot(column, rhs) / np.vdot(column, column))
    misfit = float(np.linalg.norm(rhs - r2 * column) / max(np.linalg.norm(rhs), 1e-300))

    w12 = j1.origin_wronskian(j1.conj())
    head, slope = j1.values[:40], j1.slopes[:40]
    along = wronskian(head, slope, np.conj(head), np.conj(slope))
    drift = float(np.max(np.abs(along - w12)) / abs(w12))
    wronskians = {
        "J1J2": w12,
        "J1J3": j1.origin_wronskian(j3),
        "J2J3": j1.conj().origin_wronskian(j3),
    }
    if with_j4:
        wronskians["J3J4"] = j3.origin_wronskian(solver.j4(k))

    point = ScatteringPoint(
        k=k,
        d=d,
        s=s,
        r=np.array([r1, r2]),
        r2_residual=misfit,
        wronskians=wronskians,
        drift=drift,
    )
    sampled = tuple(
        JostSolution(j.which, k, rho, j.values[40:], j.slopes[40:], j.origin) for j in (j1, j3)
    )
    return point, sampled[0], sampled[1]


@dataclass(frozen=True)
class ScatteringTable:
    """Scattering data on a k-grid."""

    points: List[ScatteringPoint]

    @property
    def ks(self) -> np.ndarray:
        return np.array([p.k for p in self.points])

    def _extrapolate(self, values: np.ndarray, count: int = 3) -> np.ndarray:
        order = np.argsort(self.ks)[:count]
        ks = self.ks[order]
        out = np.zeros(values.shape[1:], dtype=complex)
        flat = values[order].reshape(len(order), -1)
        for idx in range(flat.shape[1]):
            fit = np.polyfit(ks, flat[:, idx], 1)
            out.flat[idx] = fit[-1]
        return out

    def d_slope_at_zero(self) -> np.ndarray:
        """Linear extrapolation of D(k)/k to k = 0; the limit is diag(-2i, 2)."""
        return self._extrapolate(np.array([p.d / p.k for p in self.points]))

    def limits(self) -> Dict[str, complex]:
        """s1, s2, a1, a2 extrapolated to k = 0."""
        s = self._extrapolate(np.array([p.s for p in self.points]))
        a = self._extrapolate(np.array([p.a for p in self.points]))
        return {"s1": s[0], "s2": s[1], "a1": a[0], "a2": a[1]}

    def worst_unitarity(self) -> float:
        return max(max(abs(u) for u in p.unitarity()) for p in self.points)

    def to_rows(self) -> List[Dict[str, float]]:
        return [p.to_row() for p in self.points]


def scattering_data(
    ks: Sequence[float], solver: Optional[JostSolver] = None, with_j4: bool = False
) -> ScatteringTable:
    """Scattering data over a k-grid; each k is solved independently."""
    solver = solver or JostSolver()
    points = []
    for k in tqdm(sorted(ks), desc="scattering", disable=not progress_enabled()):
        point, _, _ = scattering_point(solver, float(k), with_j4=with_j4)
        points.append(point)
    table = ScatteringTable(points)
    logger.info(
        "scattering_table_built",
        count=len(points),
        k_min=float(table.ks.min()),
        unitarity=table.worst_unitarity(),
    )
    return table
