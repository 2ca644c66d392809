"""Low-energy distorted Fourier transform and quasi-resonant functions.

The synthesis operator acts on symbols Phi(k) = (Phi_1, Phi_2) with

    rho (E_kappa Phi)(rho) = 2^{-3/2} pi^{-1} int dk theta_kappa(k) [e Phi_1 + sigma1 conj(e) Phi_2]

where e(rho, k) is the odd scattering solution. Output lives on the same reduced line grid as
``LinearizedOperator`` so H can be applied to it directly. The k-integral uses a midpoint rule on
(0, kappa/2], the support of theta_kappa.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
from tqdm import tqdm

from ..numerics.grid import uniform_line
from ..profiles.ground_state import GroundStateKernel
from ..profiles.remote import CutoffFamily
from ..utils.errors import DomainError, ResolutionError
from ..utils.logger import get_logger, progress_enabled
from .jost import JostSolver, ScatteringPoint, scattering_point
from .operator import EigenData, LinearizedOperator

logger = get_logger(__name__)

_SYNTHESIS = 1.0 / (2.0 ** 1.5 * np.pi)


def theta_k(k, kappa: float) -> np.ndarray:
    """theta_kappa(k) = Theta(4|k|/kappa): 1 on |k| <= kappa/4, 0 on |k| >= kappa/2."""
    return CutoffFamily.profile(4.0 * np.abs(np.asarray(k, dtype=float)) / kappa)


def k_nodes(kappa: float, count: int):
    """Midpoint nodes and weights on (0, kappa/2].

    Raises:
        ResolutionError: When the spacing exceeds kappa/8
    """
    spacing = 0.5 * kappa / count
    if spacing > kappa / 8.0:
        raise ResolutionError("k-grid coarser than kappa/8", {"kappa": kappa, "count": count})
    ks = spacing * (np.arange(count) + 0.5)
    return ks, np.full(count, spacing)


@dataclass(frozen=True)
class TransformKernel:
    """Tabulated e(rho, k) for one cutoff scale.

    Attributes:
        kappa: Cutoff scale
        ks: Momentum nodes
        weights: Quadrature weights of the nodes
        nodes: Line radii rho_j = j*h
        step: Line spacing h
        kernel: e(rho_j, k_i), shape (K, n, 2)
        points: Scattering data at each node
    """

    kappa: float
    ks: np.ndarray
    weights: np.ndarray
    nodes: np.ndarray
    step: float
    kernel: np.ndarray
    points: List[ScatteringPoint]

    @property
    def theta(self) -> np.ndarray:
        return theta_k(self.ks, self.kappa)

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    def forward(self, symbol: np.ndarray) -> np.ndarray:
        """rho E_kappa Phi as a stacked line vector; symbol has shape (K, 2)."""
        symbol = np.asarray(symbol, dtype=complex)
        if symbol.shape != (self.ks.size, 2):
            raise DomainError("symbol shape does not match the k-grid", {"shape": symbol.shape})
        scale = _SYNTHESIS * self.weights * self.theta
        c1 = scale * symbol[:, 0]
        c2 = scale * symbol[:, 1]
        e = self.kernel
        up = c1 @ e[:, :, 0] + c2 @ np.conj(e[:, :, 1])
        down = c1 @ e[:, :, 1] + c2 @ np.conj(e[:, :, 0])
        return np.concatenate([up, down])

    def adjoint(self, vec: np.ndarray) -> np.ndarray:
        """E*_kappa applied to the line vector of a spinor; returns shape (K, 2)."""
        n = self.size
        up, down = vec[:n], vec[n:]
        e = self.kernel
        first = np.conj(e[:, :, 0]) @ up + np.conj(e[:, :, 1]) @ down
        second = e[:, :, 1] @ up + e[:, :, 0] @ down
        scale = np.sqrt(2.0) * self.theta * self.step
        return np.stack([scale * first, scale * second], axis=1)

    def remainder_norms(self) -> np.ndarray:
        """||e - e_0||_{L^2(R+)} per k, e_0 = (a1 e^{ik rho} + e^{-ik rho})(1, 0)."""
        out = np.zeros(self.ks.size)
        for i, (k, point) in enumerate(zip(self.ks, self.points)):
            rest = self.kernel[i].copy()
            rest[:, 0] -= point.a[0] * np.exp(1j * k * self.nodes) + np.exp(-1j * k * self.nodes)
            out[i] = float(np.sqrt(self.step * np.sum(np.abs(rest) ** 2)))
        return out


def build_kernel(
    kappa: float,
    radius: float,
    step: float,
    count: int = 32,
    solver: Optional[JostSolver] = None,
) -> TransformKernel:
    """Tabulate e(rho, k) on (0, kappa/2] and a line grid up to ``radius``.

    Raises:
        ResolutionError: On a k-grid coarser than kappa/8
        DomainError: When the Jost domain does not cover the line grid
    """
    solver = solver or JostSolver()
    if radius > solver.radius:
        raise DomainError(
            "transform grid extends beyond the Jost domain",
            {"radius": radius, "jost_radius": solver.radius},
        )
    ks, weights = k_nodes(kappa, count)
    nodes = uniform_line(int(round(radius / step)), step)
    kernel = np.zeros((ks.size, nodes.size, 2), dtype=complex)
    points = []
    for i, k in enumerate(tqdm(ks, desc=f"kernel kappa={kappa}", disable=not progress_enabled())):
        point, j1, j3 = scattering_point(solver, float(k), nodes)
        kernel[i] = point.odd_solution(j1, j3)[0]
        points.append(point)
    logger.info("transform_kernel_built", kappa=kappa, k_count=int(ks.size), nodes=nodes.size)
    return TransformKernel(
        kappa=kappa,
        ks=ks,
        weights=weights,
        nodes=nodes,
        step=step,
        kernel=kernel,
        points=points,
    )


def distorted_transform(direction: str, kernel: TransformKernel, data: np.ndarray) -> np.ndarray:
    """Forward synthesis of a symbol or the adjoint analysis of a line vector.

    Raises:
        DomainError: For an unknown direction
    """
    if direction == "forward":
        return kernel.forward(data)
    if direction in ("inverse", "adjoint"):
        return kernel.adjoint(data)
    raise DomainError(f"unknown transform direction {direction!r}")


def _sigma3_symbol(symbol: np.ndarray) -> np.ndarray:
    return symbol * np.array([1.0, -1.0])


def _sigma3_line(vec: np.ndarray) -> np.ndarray:
    return LinearizedOperator.sigma3(vec)


def composition_defect(kernel: TransformKernel, symbol: np.ndarray) -> float:
    """Relative error of E* sigma3 E sigma3 Phi = theta^2 Phi."""
    image = kernel.adjoint(_sigma3_line(kernel.forward(_sigma3_symbol(symbol))))
    target = (kernel.theta**2)[:, None] * symbol
    return float(np.linalg.norm(image - target) / np.linalg.norm(target))


def intertwining_defect(
    kernel: TransformKernel, op: LinearizedOperator, symbol: np.ndarray
) -> float:
    """Relative error of H E Phi = E k^2 sigma3 Phi on the kernel's line grid."""
    if op.size != kernel.size or not np.isclose(op.step, kernel.step):
        raise DomainError(
            "operator and kernel grids differ", {"op": op.size, "kernel": kernel.size}
        )
    left = op.apply(kernel.forward(symbol))
    right = kernel.forward((kernel.ks**2)[:, None] * _sigma3_symbol(symbol))
    return float(np.linalg.norm(left - right) / np.linalg.norm(right))


def regrid(vec: np.ndarray, nodes: np.ndarray, target: np.ndarray) -> np.ndarray:
    n = nodes.size
    parts = []
    for part in (vec[:n], vec[n:]):
        re = np.interp(target, nodes, part.real, right=0.0)
        im = np.interp(target, nodes, part.imag, right=0.0)
        parts.append(re + 1j * im)
    return np.concatenate(parts)


def eigenmode_annihilation(kernel: TransformKernel, eigen: EigenData) -> Dict[str, float]:
    """sup_k |E* sigma3 zeta_+/-| relative to ||zeta||; zeta is extended by zero."""
    nodes = eigen.operator.nodes
    out = {}
    for name, zeta in (("plus", eigen.zeta_plus), ("minus", eigen.zeta_minus)):
        line = regrid(zeta, nodes, kernel.nodes)
        image = kernel.adjoint(_sigma3_line(line))
        out[name] = float(np.max(np.abs(image)) / eigen.operator.norm(zeta))
    return out


def bump_symbol(kernel: TransformKernel, rng: np.random.Generator) -> np.ndarray:
    """Smooth random symbol supported in [kappa/8, kappa/4]."""
    low, high = kernel.kappa / 8.0, kernel.kappa / 4.0
    k = kernel.ks
    profile = np.zeros(k.size)
    inside = (k > low) & (k < high)
    width = high - low
    s = (k[inside] - low) / width
    profile[inside] = np.exp(-1.0 / (s * (1.0 - s)) + 4.0)
    coeffs = rng.normal(size=2) + 1j * rng.normal(size=2)
    return profile[:, None] * coeffs[None, :]


@dataclass(frozen=True)
class QuasiResonant:
    """h_kappa = sqrt(2) E_kappa (1, 0) and its pairings with sigma3 xi.

    Attributes:
        kappa: Cutoff scale
        line: rho h_kappa as a stacked line vector
        l2: ||h_kappa||
        weighted: ||y h_kappa||
        pairing_sum: <h_kappa, sigma3(xi0 + xi1)>
        pairing_difference: <h_kappa, sigma3(xi1 - xi0)>
    """

    kappa: float
    line: np.ndarray
    l2: float
    weighted: float
    pairing_sum: complex
    pairing_difference: complex

    def to_row(self) -> Dict[str, float]:
        return {
            "kappa": self.kappa,
            "l2": self.l2,
            "weighted": self.weighted,
            "pairing_sum_re": self.pairing_sum.real,
            "pairing_sum_im": self.pairing_sum.imag,
            "pairing_difference_re": self.pairing_difference.real,
            "pairing_difference_im": self.pairing_difference.imag,
        }


def quasi_resonant(kernel: TransformKernel) -> QuasiResonant:
    """Quasi-resonant function of the kernel's cutoff and its diagnostics."""
    symbol = np.zeros((kernel.ks.size, 2), dtype=complex)
    symbol[:, 0] = 1.0
    line = np.sqrt(2.0) * kernel.forward(symbol)
    rho = kernel.nodes
    n = kernel.size
    w = rho * GroundStateKernel.w(rho) / np.sqrt(3.0)
    w1 = -2.0 * rho * GroundStateKernel.w1(rho) / np.sqrt(3.0)
    xi0 = np.concatenate([w, -w])
    xi1 = np.concatenate([w1, w1])
    measure = 4.0 * np.pi * kernel.step

    def pair(mode: np.ndarray) -> complex:
        return complex(measure * np.sum(line * np.conj(_sigma3_line(mode))))

    l2 = float(np.sqrt(measure * np.sum(np.abs(line) ** 2)))
    rho2 = np.concatenate([rho, rho]) ** 2
    weighted = float(np.sqrt(measure * np.sum(rho2 * np.abs(line) ** 2)))
    result = QuasiResonant(
        kernel.kappa,
        line,
        l2,
        weighted,
        pair(xi0 + xi1),
        pair(xi1 - xi0),
    )
    logger.info(
        "quasi_resonant_built",
        kappa=kernel.kappa,
        l2=l2,
        pairing=abs(result.pairing_sum),
        target=4.0 * np.pi,
        nodes=n,
    )
    return result


def extrapolate_pairing(results: Sequence[QuasiResonant]) -> float:
    """Linear extrapolation in kappa^{1/2} of Re <h_kappa, sigma3(xi0 + xi1)> to kappa = 0."""
    if len(results) < 2:
        return float(results[0].pairing_sum.real) if results else float("nan")
    x = np.sqrt([r.kappa for r in results])
    y = np.array([r.pairing_sum.real for r in results])
    return float(np.polyfit(x, y, 1)[-1])
