"""Ground state W, its scaling generator and the explicit zero-energy solutions of L+/-.

With a = 1 + rho^2/3:

    W = a^{-1/2},  W1 = (1/2 + rho d)W = a^{-3/2}(1/2 - rho^2/6),
    Theta_- = (a^{1/2} - 2a^{-1/2})/rho,
    Theta_+ = -2(a^{1/2} - 8a^{-1/2} + 8a^{-3/2})/rho,

normalized so that rho^2 (Theta' Phi - Theta Phi') = 1 for both pairs.
"""

import warnings
from typing import Callable, Dict, Literal

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from ..numerics.fields import ComplexField, radial_derivative
from ..utils.errors import DomainError, NumericError, SingularityError

GroundName = Literal["W", "W1", "PhiPlus", "PhiMinus", "ThetaPlus", "ThetaMinus"]

# Exact constants: ||grad W||^2 = ||W||_6^6 and E(W) = (2/3)||grad W||^2
GRAD_W_SQUARED = 3.0 * np.sqrt(3.0) * np.pi**2 / 4.0
ENERGY_W = np.sqrt(3.0) * np.pi**2 / 2.0


def _a(rho: np.ndarray) -> np.ndarray:
    return 1.0 + rho**2 / 3.0


class GroundStateKernel:
    """Closed-form W, W1, Phi+/-, Theta+/- and the potentials of the linearization."""

    @staticmethod
    def w(rho: np.ndarray) -> np.ndarray:
        return _a(rho) ** -0.5

    @staticmethod
    def dw(rho: np.ndarray) -> np.ndarray:
        return -(rho / 3.0) * _a(rho) ** -1.5

    @staticmethod
    def w1(rho: np.ndarray) -> np.ndarray:
        return _a(rho) ** -1.5 * (0.5 - rho**2 / 6.0)

    @staticmethod
    def dw1(rho: np.ndarray) -> np.ndarray:
        a = _a(rho)
        return -rho * a**-2.5 * (0.5 - rho**2 / 6.0) - (rho / 3.0) * a**-1.5

    @staticmethod
    def numerator_minus(rho: np.ndarray) -> np.ndarray:
        """rho * Theta_-(rho), smooth and equal to -1 at the origin."""
        a = _a(rho)
        return a**0.5 - 2.0 * a**-0.5

    @staticmethod
    def dnumerator_minus(rho: np.ndarray) -> np.ndarray:
        a = _a(rho)
        return (rho / 3.0) * a**-1.5 * (a + 2.0)

    @staticmethod
    def numerator_plus(rho: np.ndarray) -> np.ndarray:
        """rho * Theta_+(rho), smooth and equal to -2 at the origin."""
        a = _a(rho)
        return -2.0 * (a**0.5 - 8.0 * a**-0.5 + 8.0 * a**-1.5)

    @staticmethod
    def dnumerator_plus(rho: np.ndarray) -> np.ndarray:
        a = _a(rho)
        return -(4.0 * rho / 3.0) * (0.5 * a**-0.5 + 4.0 * a**-1.5 - 12.0 * a**-2.5)

    @classmethod
    def rho2_theta(cls, sign: str, rho: np.ndarray) -> np.ndarray:
        """rho^2 Theta_+/-(rho) = rho * numerator, finite at the origin."""
        num = cls.numerator_plus(rho) if sign == "+" else cls.numerator_minus(rho)
        return rho * num

    @classmethod
    def theta(cls, sign: str, rho: np.ndarray) -> np.ndarray:
        num = cls.numerator_plus(rho) if sign == "+" else cls.numerator_minus(rho)
        return num / rho

    @classmethod
    def dtheta(cls, sign: str, rho: np.ndarray) -> np.ndarray:
        if sign == "+":
            num, dnum = cls.numerator_plus(rho), cls.dnumerator_plus(rho)
        else:
            num, dnum = cls.numerator_minus(rho), cls.dnumerator_minus(rho)
        return dnum / rho - num / rho**2

    @classmethod
    def phi(cls, sign: str, rho: np.ndarray) -> np.ndarray:
        return cls.w1(rho) if sign == "+" else cls.w(rho)

    @classmethod
    def dphi(cls, sign: str, rho: np.ndarray) -> np.ndarray:
        return cls.dw1(rho) if sign == "+" else cls.dw(rho)

    @classmethod
    def v1(cls, rho: np.ndarray) -> np.ndarray:
        return -3.0 * cls.w(rho) ** 4

    @classmethod
    def v2(cls, rho: np.ndarray) -> np.ndarray:
        return -2.0 * cls.w(rho) ** 4

    @staticmethod
    def tail_coefficient(power: int) -> float:
        """Coefficient of rho^power in the large-rho expansion of W (odd negative powers only)."""
        if power >= 0 or power % 2 == 0:
            return 0.0
        m = (-1 - power) // 2
        binom = 1.0
        for i in range(m):
            binom *= (-0.5 - i) / (i + 1)
        return float(np.sqrt(3.0) * binom * 3.0**m)


_EVALUATORS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "W": GroundStateKernel.w,
    "W1": GroundStateKernel.w1,
    "PhiMinus": GroundStateKernel.w,
    "PhiPlus": GroundStateKernel.w1,
    "ThetaMinus": lambda r: GroundStateKernel.theta("-", r),
    "ThetaPlus": lambda r: GroundStateKernel.theta("+", r),
}


def eval_ground(which: GroundName, rho):
    """Evaluate one of the closed-form radial functions.

    Args:
        which: W, W1, PhiPlus, PhiMinus, ThetaPlus or ThetaMinus
        rho: Radius or array of radii, >= 0

    Returns:
        Complex value(s)

    Raises:
        DomainError: For negative radii or an unknown name
        SingularityError: For Theta+/- at rho = 0
    """
    if which not in _EVALUATORS:
        raise DomainError(f"unknown ground-state function {which!r}")
    r = np.asarray(rho, dtype=float)
    if np.any(r < 0.0):
        raise DomainError("radius must be non-negative", {"min": float(r.min())})
    if which.startswith("Theta") and np.any(r == 0.0):
        raise SingularityError(f"{which} is singular at rho = 0")
    value = _EVALUATORS[which](r).astype(complex)
    return complex(value) if value.ndim == 0 else value


def ground_field(grid, which: GroundName = "W") -> ComplexField:
    """Sample W, W1 (even) or Theta+/- (no origin closure) on a grid."""
    parity = "none" if which.startswith("Theta") else "even"
    return ComplexField(grid, eval_ground(which, grid.nodes), parity)


def apply_L(sign: str, f: ComplexField) -> ComplexField:
    """L+ = -Delta - 5W^4 or L- = -Delta - W^4 applied on the grid."""
    coupling = 5.0 if sign == "+" else 1.0
    w4 = GroundStateKernel.w(f.nodes) ** 4
    return ComplexField(f.grid, -f.laplacian().values - coupling * w4 * f.values, f.parity)


def energy_functional(psi: ComplexField) -> float:
    """E = integral of |grad psi|^2 - |psi|^6/3 over R^3.

    Raises:
        NumericError: On non-finite samples
    """
    if not np.all(np.isfinite(psi.values)):
        raise NumericError("energy of a non-finite field")
    grad = radial_derivative(psi, 1).values
    density = np.abs(grad) ** 2 - np.abs(psi.values) ** 6 / 3.0
    return float(4.0 * np.pi * np.sum(psi.grid.weights * density))


def rescaled_ground(grid, scale: float, phase: float = 0.0) -> ComplexField:
    """e^{i phase} scale^{1/2} W(scale * rho)."""
    return ComplexField(
        grid, np.exp(1j * phase) * np.sqrt(scale) * GroundStateKernel.w(scale * grid.nodes), "even"
    )


def ground_identities(grid, window: float = 50.0) -> Dict[str, float]:
    """Residuals of Delta W + W^5 = 0, L- W = 0 and L+ W1 = 0 on rho <= window, and the
    relative Pohozaev defect |int |grad W|^2 - int W^6| / int W^6.

    Both Pohozaev integrals are taken on the grid and completed beyond its last node with
    the closed-form integrands.
    """
    w = ground_field(grid, "W")
    mask = grid.mask((0.0, window))
    stationary = w.laplacian().values + w.values**5
    out = {
        "stationary": float(np.max(np.abs(stationary[mask]))),
        "L_minus_W": float(np.max(np.abs(apply_L("-", w).values[mask]))),
        "L_plus_W1": float(np.max(np.abs(apply_L("+", ground_field(grid, "W1")).values[mask]))),
    }
    edge = grid.r_max
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        grad_tail = quad(lambda r: r * r * GroundStateKernel.dw(r) ** 2, edge, np.inf)[0]
        sextic_tail = quad(lambda r: r * r * GroundStateKernel.w(r) ** 6, edge, np.inf)[0]
    gradient = float(np.sum(grid.weights * np.abs(radial_derivative(w, 1).values) ** 2))
    sextic = float(np.sum(grid.weights * np.abs(w.values) ** 6))
    gradient = 4.0 * np.pi * (gradient + grad_tail)
    sextic = 4.0 * np.pi * (sextic + sextic_tail)
    out["pohozaev"] = abs(gradient - sextic) / sextic
    out["gradient_constant"] = abs(gradient - GRAD_W_SQUARED) / GRAD_W_SQUARED
    return out
