"""Remote-region profile psi_out = v1 + v2 + v3 and the scattering state zeta*.

In the remote region |x| >= t^{1/2+eps2}/10 the approximate solution is a free wave whose
behavior at the origin is fixed by the large-y connection data of the self-similar profiles.
The cutoff Theta_delta(x/t) confines the M2 part to |x| <= 2 delta t; v3 removes the leading
commutator it creates.
"""

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.special import expit

from ..numerics.fields import ComplexField, norm, radial_derivative
from ..numerics.grid import RadialGrid, make_grid
from ..utils.config import GridSpec, Params, RemoteConfig
from ..utils.errors import DomainError, QuadratureError, ResolutionError
from ..utils.logger import get_logger
from .self_similar import SelfSimilarSolution

logger = get_logger(__name__)

# Smooth-step derivatives below this distance from r = 1 or r = 2 are exactly zero in
# double precision
_EDGE = 1e-3
_ZETA_PREFACTOR = np.pi ** (-1.5) * np.exp(0.75j * np.pi)
MAX_FREQUENCY_NODES = 200_000


@dataclass(frozen=True)
class CutoffFamily:
    """Radial smooth step Theta with Theta = 1 on r <= 1 and Theta = 0 on r >= 2.

    Theta(r) = 1 / (1 + exp(g(r))), g(r) = 1/(2 - r) - 1/(r - 1) on 1 < r < 2, which equals
    phi(2 - r) / (phi(2 - r) + phi(r - 1)) with phi(s) = exp(-1/s).
    """

    delta: float = 1.0

    @staticmethod
    def profile(r, order: int = 0) -> np.ndarray:
        """Theta and its first four radial derivatives.

        Raises:
            DomainError: For derivative orders above 4
        """
        if order not in (0, 1, 2, 3, 4):
            raise DomainError(f"cutoff derivative of order {order} is not available")
        r = np.asarray(r, dtype=float)
        out = np.zeros(r.shape)
        if order == 0:
            out[r <= 1.0 + _EDGE] = 1.0
        inside = (r > 1.0 + _EDGE) & (r < 2.0 - _EDGE)
        if not np.any(inside):
            return out
        a = r[inside] - 1.0
        b = 2.0 - r[inside]
        g = 1.0 / b - 1.0 / a
        s = expit(-g)
        if order == 0:
            out[inside] = s
            return out
        g1 = 1.0 / a**2 + 1.0 / b**2
        g2 = -2.0 / a**3 + 2.0 / b**3
        g3 = 6.0 / a**4 + 6.0 / b**4
        g4 = -24.0 / a**5 + 24.0 / b**5
        s1 = -s * (1.0 - s)
        s2 = s * (1.0 - s) * (1.0 - 2.0 * s)
        s3 = s1 * (1.0 - 6.0 * s + 6.0 * s**2)
        s4 = s2 * (1.0 - 12.0 * s + 12.0 * s**2)
        if order == 1:
            out[inside] = s1 * g1
        elif order == 2:
            out[inside] = s2 * g1**2 + s1 * g2
        elif order == 3:
            out[inside] = s3 * g1**3 + 3.0 * s2 * g1 * g2 + s1 * g3
        else:
            # Faa di Bruno for the composition s(g(r))
            out[inside] = (
                s4 * g1**4
                + 6.0 * s3 * g1**2 * g2
                + 3.0 * s2 * g2**2
                + 4.0 * s2 * g1 * g3
                + s1 * g4
            )
        return out

    def scaled(self, r, scale: float, order: int = 0) -> np.ndarray:
        """d^order/dr^order of Theta(r / scale)."""
        return self.profile(np.asarray(r, dtype=float) / scale, order) / scale**order

    def theta_delta(self, xi, order: int = 0) -> np.ndarray:
        return self.scaled(xi, self.delta, order)

    def laplacian(self, r, scale: float) -> np.ndarray:
        """Three-dimensional Laplacian of Theta(|x| / scale) at radii r > 0."""
        r = np.asarray(r, dtype=float)
        out = self.scaled(r, scale, 2)
        positive = r > 0.0
        out[positive] += 2.0 * self.scaled(r[positive], scale, 1) / r[positive]
        return out

    @staticmethod
    def tilde(r) -> np.ndarray:
        """xi . grad Theta(xi), supported in 1 <= |xi| <= 2."""
        r = np.asarray(r, dtype=float)
        return r * CutoffFamily.profile(r, 1)


@dataclass(frozen=True)
class PowerLogTerm:
    """coeff * xi^power * (ln xi)^log_power."""

    coeff: complex
    power: complex
    log_power: int = 0

    def evaluate(self, xi: np.ndarray) -> np.ndarray:
        value = self.coeff * xi**self.power
        if self.log_power:
            value = value * np.log(xi) ** self.log_power
        return value

    def derivative(self) -> List["PowerLogTerm"]:
        out = [PowerLogTerm(self.coeff * self.power, self.power - 1.0, self.log_power)]
        if self.log_power:
            out.append(
                PowerLogTerm(self.coeff * self.log_power, self.power - 1.0, self.log_power - 1)
            )
        return out


def _evaluate_terms(terms: Sequence[PowerLogTerm], xi: np.ndarray) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    out = np.zeros(xi.shape, dtype=complex)
    for term in terms:
        out = out + term.evaluate(xi)
    return out


def _derive_terms(terms: Sequence[PowerLogTerm]) -> List[PowerLogTerm]:
    return [piece for term in terms for piece in term.derivative()]


@dataclass(frozen=True, eq=False)
class RemoteProfile:
    """Remote profile with its coefficient pack.

    Attributes:
        params: (nu, alpha0, delta)
        eps2: Remote matching exponent
        d1: d_1^n for n = 0, 1, 2
        d2: d_2^n for n = 0, 1, 2
        lambda2: lambda_2 of the A_{2,0} decomposition
        solution: Self-similar system providing M1, M2 and g1
        cutoff: Smooth step with scale delta
    """

    params: Params
    eps2: float
    d1: Tuple[complex, complex, complex]
    d2: Tuple[complex, complex, complex]
    lambda2: complex
    solution: Optional[SelfSimilarSolution] = None
    cutoff: CutoffFamily = field(default_factory=CutoffFamily)
    hat_samples: int = 1201

    @classmethod
    def from_solution(
        cls, solution: SelfSimilarSolution, delta: Optional[float] = None, eps2: float = 0.375
    ) -> "RemoteProfile":
        params = solution.params
        if delta is not None:
            params = params.model_copy(update={"delta": delta})
        d1 = tuple(complex(solution.d_table[n][0]) for n in range(3))
        d2 = tuple(complex(solution.d_table[n][1]) for n in range(3))
        return cls(
            params=params,
            eps2=eps2,
            d1=d1,
            d2=d2,
            lambda2=complex(solution.lambdas[1]),
            solution=solution,
            cutoff=CutoffFamily(params.delta),
        )

    @property
    def delta(self) -> float:
        return self.params.delta

    @property
    def z_terms(self) -> List[PowerLogTerm]:
        """Power-log terms of z.

        z(xi) = d2^0 xi^{-2ia-2+nu} + d2^1 xi^{-2ia-1+3nu} - (d2^2 s ln xi - lambda2) xi^{-2ia+5nu}
        with a = alpha0 and s = 1 + 2 nu.
        """
        nu, a = self.params.nu, self.params.alpha0
        s = 1.0 + 2.0 * nu
        return [
            PowerLogTerm(self.d2[0], -2j * a - 2.0 + nu),
            PowerLogTerm(self.d2[1], -2j * a - 1.0 + 3.0 * nu),
            PowerLogTerm(-self.d2[2] * s, -2j * a + 5.0 * nu, 1),
            PowerLogTerm(self.lambda2, -2j * a + 5.0 * nu),
        ]

    def z(self, xi, order: int = 0) -> np.ndarray:
        """z or its radial derivatives at xi > 0."""
        terms = self.z_terms
        for _ in range(order):
            terms = _derive_terms(terms)
        return _evaluate_terms(terms, xi)

    def v_hat3(self, xi) -> np.ndarray:
        """-i z Laplacian(Theta_delta) - 2i z' Theta_delta', zero outside delta <= xi <= 2 delta."""
        xi = np.asarray(xi, dtype=float)
        out = np.zeros(xi.shape, dtype=complex)
        support = (xi > self.delta) & (xi < 2.0 * self.delta)
        if np.any(support):
            x = xi[support]
            lap = self.cutoff.laplacian(x, self.delta)
            grad = self.cutoff.theta_delta(x, 1)
            out[support] = -1j * self.z(x) * lap - 2j * self.z(x, 1) * grad
        return out

    @cached_property
    def _hat_fields(self) -> Tuple[ComplexField, ComplexField, ComplexField]:
        grid = make_grid(
            GridSpec.uniform(start=0.9 * self.delta, end=2.1 * self.delta, count=self.hat_samples)
        )
        hat = ComplexField(grid, self.v_hat3(grid.nodes), "none")
        return hat, radial_derivative(hat, 1), hat.laplacian()

    def _hat(self, xi: np.ndarray, which: int) -> np.ndarray:
        out = np.zeros(xi.shape, dtype=complex)
        support = (xi > self.delta) & (xi < 2.0 * self.delta)
        if np.any(support):
            out[support] = self._hat_fields[which].interpolate(xi[support])
        return out

    def _check(self, x: np.ndarray, t: float) -> None:
        if self.solution is None:
            raise DomainError("remote profile has no self-similar solution attached")
        edge = 0.1 * t ** (0.5 + self.eps2)
        if x.size and x.min() < edge * (1.0 - 1e-12):
            raise DomainError(
                "remote evaluation inside the remote cut",
                {"t": t, "x_min": float(x.min()), "edge": edge},
            )

    def _branches(self, x: np.ndarray, t: float):
        """Pieces of v1 and uncut v2 with their x and t derivatives."""
        nu, a = self.params.nu, self.params.alpha0
        s = 1.0 + 2.0 * nu
        sol = self.solution
        y = x / np.sqrt(t)
        phase = np.exp(1j * a * np.log(t))
        exps = (0.5 * (1.0 + nu), 0.5 * (2.0 + 3.0 * nu), 0.5 * (3.0 + 5.0 * nu))

        v1 = np.zeros(x.shape, dtype=complex)
        v1_x = np.zeros_like(v1)
        v1_t = np.zeros_like(v1)
        v2 = np.zeros_like(v1)
        v2_x = np.zeros_like(v1)
        v2_t = np.zeros_like(v1)
        for n in (0, 1):
            amp = t ** (-exps[n])
            m1, dm1 = sol.bases[n].evaluate("M1", y)
            m2, dm2 = sol.bases[n].evaluate("M2", y)
            for coeff, f, df, val, dx, dt in (
                (self.d1[n], m1, dm1, v1, v1_x, v1_t),
                (self.d2[n], m2, dm2, v2, v2_x, v2_t),
            ):
                val += coeff * amp * f
                dx += coeff * amp * df / np.sqrt(t)
                dt += coeff * amp * ((1j * a - exps[n]) * f - 0.5 * y * df) / t

        amp = t ** (-exps[2])
        m2, dm2 = sol.bases[2].evaluate("M2", y)
        g1, dg1 = sol.tails["g1"].evaluate(y)
        log = np.log(x / t)
        weight = self.d2[2] * s * log - self.lambda2
        body = self.d2[2] * g1 - weight * m2
        dbody_y = self.d2[2] * dg1 - weight * dm2
        v2 += amp * body
        v2_x += amp * (dbody_y / np.sqrt(t) - self.d2[2] * s * m2 / x)
        v2_t += amp * ((1j * a - exps[2]) * body - 0.5 * y * dbody_y + self.d2[2] * s * m2) / t
        return (phase * v1, phase * v1_x, phase * v1_t), (phase * v2, phase * v2_x, phase * v2_t)

    def sample(self, x, t: float) -> "RegionSample":
        """psi_out with analytic x and t derivatives and its residual at radii x.

        Raises:
            DomainError: Inside the remote cut or without connection data
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        self._check(x, t)
        (v1, v1_x, v1_t), (v2u, v2u_x, v2u_t) = self._branches(x, t)
        xi = x / t
        cut = self.cutoff.theta_delta(xi)
        cut_x = self.cutoff.theta_delta(xi, 1) / t
        cut_t = -xi * self.cutoff.theta_delta(xi, 1) / t
        cut_lap = self.cutoff.laplacian(xi, self.delta) / t**2

        chirp = np.exp(0.25j * x**2 / t)
        hat = self._hat(xi, 0)
        dhat = self._hat(xi, 1)
        lap_hat = self._hat(xi, 2)
        v3 = t**-2.5 * chirp * hat
        v3_x = t**-2.5 * chirp * (0.5j * x / t * hat + dhat / t)
        v3_t = t**-2.5 * chirp * ((-2.5 - 0.25j * x**2 / t) * hat / t - xi * dhat / t)

        value = v1 + cut * v2u + v3
        commutator = -1j * cut_t * v2u - cut_lap * v2u - 2.0 * cut_x * v2u_x
        free_v3 = -(t**-4.5) * chirp * lap_hat + 1j * t**-3.5 * chirp * hat
        residual = commutator + free_v3 - np.abs(value) ** 4 * value
        return RegionSample(
            value=value,
            dx=v1_x + cut_x * v2u + cut * v2u_x + v3_x,
            dt=v1_t + cut_t * v2u + cut * v2u_t + v3_t,
            residual=residual,
            parts={"v1": v1, "v2": cut * v2u, "v3": v3},
        )

    def v20(self, x, t: float) -> np.ndarray:
        """Leading free wave e^{i x^2/4t} t^{-3/2} Theta_delta(x/t) z(x/t)."""
        x = np.asarray(x, dtype=float)
        xi = x / t
        return np.exp(0.25j * x**2 / t) * t**-1.5 * self.cutoff.theta_delta(xi) * self.z(xi)

    def fourier_amplitude(self, k) -> np.ndarray:
        """F(k) = Theta_delta(2k) z(2k); zeta* has Fourier transform 2^{3/2} e^{3i pi/4} F."""
        k = np.asarray(k, dtype=float)
        out = np.zeros(k.shape, dtype=complex)
        positive = (k > 0.0) & (k < self.delta)
        out[positive] = self.cutoff.theta_delta(2.0 * k[positive]) * self.z(2.0 * k[positive])
        return out


@dataclass(frozen=True)
class RegionSample:
    """Region evaluator output at radii x and one time.

    Holds the value, its analytic x and t derivatives and the residual of the evaluator on its
    own region.
    """

    value: np.ndarray
    dx: np.ndarray
    dt: np.ndarray
    residual: np.ndarray
    parts: Dict[str, np.ndarray] = field(default_factory=dict)


def eval_remote(x, t: float, profile: RemoteProfile):
    """Value of psi_out at radius x (scalar or array).

    Raises:
        DomainError: Inside the remote cut
    """
    values = profile.sample(x, t).value
    return complex(values[0]) if np.ndim(x) == 0 else values


@dataclass(frozen=True)
class ZetaStar:
    """Samples of zeta* with its homogeneous Sobolev norms."""

    field: ComplexField
    sobolev: Dict[float, float]
    max_error: float


def _sine_transform(func, r: float, upper: float, limit: int) -> Tuple[complex, float]:
    """int_0^upper func(k) k sin(k r) dk for complex func, with its error estimate."""
    parts = []
    error = 0.0
    for component in (np.real, np.imag):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IntegrationWarning)
            if r > 0.0:
                value, err = quad(
                    lambda k: component(func(k)) * k,
                    0.0,
                    upper,
                    weight="sin",
                    wvar=r,
                    limit=limit,
                )
            else:
                value, err = quad(lambda k: component(func(k)) * k * k, 0.0, upper, limit=limit)
        parts.append(value)
        error = max(error, err)
    return complex(parts[0], parts[1]), error


def sobolev_norm(profile: RemoteProfile, s: float, limit: int = 200) -> float:
    """||zeta*||_{Hdot^s} from its Fourier amplitude.

    Raises:
        QuadratureError: When the norm diverges (s <= 1/2 - nu) or does not converge
    """
    if s <= 0.5 - profile.params.nu:
        raise QuadratureError(
            "homogeneous norm of zeta* diverges at the origin", {"s": s, "nu": profile.params.nu}
        )

    def density(k: float) -> float:
        amplitude = profile.fourier_amplitude(np.array([k]))[0]
        return k ** (2.0 * s + 2.0) * abs(amplitude) ** 2

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        value, err = quad(density, 0.0, profile.delta, limit=limit)
    if not np.isfinite(value) or err > 1e-6 * max(abs(value), 1e-300) + 1e-12:
        raise QuadratureError("Sobolev norm quadrature did not converge", {"s": s, "error": err})
    return float(np.sqrt(8.0 * 4.0 * np.pi * value))


def zeta_star(
    profile: RemoteProfile, grid: RadialGrid, tol: float = 1e-6, limit: int = 400
) -> ZetaStar:
    """zeta*(x) = pi^{-3/2} e^{3i pi/4} int e^{i x.xi} Theta_delta(2 xi) z(2 xi) d xi.

    The three-dimensional integral reduces to (4 pi / r) int_0^delta F(k) k sin(kr) dk, evaluated
    with a sine-weighted oscillatory rule at every radius.

    Args:
        profile: Remote profile providing z
        grid: Radii at which zeta* is sampled
        tol: Accepted absolute error relative to the largest sample
        limit: Subinterval limit of the adaptive rule

    Returns:
        Samples with Hdot^s norms for s in {1/2 - nu + 0.1, 1, 2}

    Raises:
        QuadratureError: When a radius does not reach the tolerance
    """
    values = np.zeros(grid.size, dtype=complex)
    errors = np.zeros(grid.size)
    for i, r in enumerate(grid.nodes):
        integral, err = _sine_transform(
            lambda k: profile.fourier_amplitude(np.array([k]))[0], r, profile.delta, limit
        )
        scale = 4.0 * np.pi / r if r > 0.0 else 4.0 * np.pi
        values[i] = _ZETA_PREFACTOR * scale * integral
        errors[i] = abs(_ZETA_PREFACTOR) * scale * err
    size = max(float(np.max(np.abs(values))), 1e-300)
    worst = float(np.max(errors)) / size
    if worst > tol:
        raise QuadratureError("zeta* quadrature is under-resolved", {"relative_error": worst})
    exponents = (0.5 - profile.params.nu + 0.1, 1.0, 2.0)
    sobolev = {round(s, 6): sobolev_norm(profile, s) for s in exponents}
    logger.info("zeta_star_computed", samples=grid.size, sobolev=sobolev, error=worst)
    return ZetaStar(ComplexField(grid, values, "even"), sobolev, worst)


def free_evolution(
    profile: RemoteProfile, t: float, radii: np.ndarray, points_per_wave: int = 8
) -> np.ndarray:
    """e^{it Delta} zeta* at radii > 0 by a midpoint sine sum over the frequency support.

    Raises:
        ResolutionError: When the chirp e^{-itk^2} needs more frequency nodes than allowed
    """
    radii = np.asarray(radii, dtype=float)
    bandwidth = 2.0 * t * profile.delta + float(radii.max())
    count = int(np.ceil(profile.delta * bandwidth * points_per_wave / (2.0 * np.pi)))
    if count > MAX_FREQUENCY_NODES:
        raise ResolutionError(
            "free evolution needs too many frequency nodes", {"t": t, "nodes": count}
        )
    dk = profile.delta / count
    k = (np.arange(count) + 0.5) * dk
    weights = profile.fourier_amplitude(k) * np.exp(-1j * t * k**2) * k * dk
    out = np.zeros(radii.size, dtype=complex)
    block = max(1, 2_000_000 // count)
    for start in range(0, radii.size, block):
        r = radii[start : start + block]
        out[start : start + block] = np.sin(np.outer(r, k)) @ weights / r
    return _ZETA_PREFACTOR * 4.0 * np.pi * out


def free_evolution_gap(
    profile: RemoteProfile, t: float, gamma: float = 0.4, step: float = 0.25
) -> float:
    """||grad(v_{2,0} - e^{it Delta} zeta*)||_{L^2(|x| >= t^gamma)}."""
    start = t**gamma
    end = 2.2 * profile.delta * t
    count = max(int(np.ceil((end - start) / step)) + 1, 7)
    grid = make_grid(GridSpec.uniform(start=start, end=end, count=count))
    gap = profile.v20(grid.nodes, t) - free_evolution(profile, t, grid.nodes)
    value = norm(ComplexField(grid, gap, "none"), "Hdot1")
    logger.debug("free_evolution_gap", t=t, gamma=gamma, gap=value)
    return value


def remote_gradient_norms(
    profile: RemoteProfile, t: float, config: Optional[RemoteConfig] = None
) -> Dict[int, float]:
    """||grad^l psi_out||_{L^2} for l = 1, 2 on |x| >= t^{1/2+eps2}/10, up to |x| = 3 delta t."""
    config = config or RemoteConfig()
    start = 0.1 * t ** (0.5 + profile.eps2)
    end = 3.0 * profile.delta * t
    if end <= start:
        raise DomainError("remote window is empty", {"t": t, "start": start, "end": end})
    count = max(int(np.ceil((end - start) / config.x_outer_step)) + 1, 7)
    grid = make_grid(GridSpec.uniform(start=start, end=end, count=count))
    psi = ComplexField(grid, profile.sample(grid.nodes, t).value, "none")
    return {1: norm(psi, "Hdot1"), 2: norm(psi, "Hdot2")}
