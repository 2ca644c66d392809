"""Matrix linearization H around W and its unstable eigenpair.

Everything acts on the reduced variable phi = rho * zeta sampled at rho_j = j*h, j = 1..n, with a
Dirichlet far end. A spinor is stored as one stacked complex vector (phi_up, phi_down) of length
2n. H = sigma3 S with S real symmetric, so the identities sigma1 H sigma1 = -H and
sigma3 H sigma3 = H^T hold for the assembled matrices and not only in the limit.
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from ..numerics.fields import ComplexField, SpinorField
from ..numerics.grid import RadialGrid, line_second_difference, make_grid, uniform_line
from ..profiles.ground_state import GroundStateKernel
from ..utils.config import GridSpec
from ..utils.errors import ResolutionError
from ..utils.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class LinearizedOperator:
    """H = -Delta sigma3 - 3W^4 sigma3 - 2W^4 sigma3 sigma1 on a uniform line grid.

    Attributes:
        step: Node spacing h
        nodes: rho_j = j*h
        second: Dirichlet second difference D2
        potential_scale: Multiplier of the potential, 0 gives the free operator
    """

    step: float
    nodes: np.ndarray
    second: sp.csr_matrix
    potential_scale: float = 1.0
    _cache: Dict[str, object] = field(default_factory=dict, repr=False)

    @classmethod
    def build(
        cls, radius: float, step: float, potential_scale: float = 1.0
    ) -> "LinearizedOperator":
        count = int(round(radius / step))
        if count < 20:
            raise ResolutionError("line grid too short", {"radius": radius, "step": step})
        nodes = uniform_line(count, step)
        second = line_second_difference(count, step, far="dirichlet")
        logger.debug("linearized_operator_built", nodes=count, radius=count * step)
        return cls(step=step, nodes=nodes, second=second, potential_scale=potential_scale)

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    @property
    def radius(self) -> float:
        return float(self.nodes[-1])

    @property
    def v1(self) -> np.ndarray:
        return self.potential_scale * GroundStateKernel.v1(self.nodes)

    @property
    def v2(self) -> np.ndarray:
        return self.potential_scale * GroundStateKernel.v2(self.nodes)

    @property
    def grid(self) -> RadialGrid:
        """Radial grid on the same nodes, for interop with ComplexField."""
        if "grid" not in self._cache:
            spec = GridSpec.uniform(end=self.radius, count=self.size, start=self.step)
            self._cache["grid"] = make_grid(spec)
        return self._cache["grid"]  # type: ignore[return-value]

    def symmetric_part(self) -> sp.csr_matrix:
        """S = sigma3 H, real symmetric."""
        if "S" not in self._cache:
            diag = -self.second + sp.diags(self.v1)
            coupling = sp.diags(self.v2)
            self._cache["S"] = sp.bmat([[diag, coupling], [coupling, diag]], format="csr")
        return self._cache["S"]  # type: ignore[return-value]

    def matrix(self) -> sp.csr_matrix:
        if "H" not in self._cache:
            self._cache["H"] = (self.sigma3_matrix() @ self.symmetric_part()).tocsr()
        return self._cache["H"]  # type: ignore[return-value]

    def sigma3_matrix(self) -> sp.csr_matrix:
        n = self.size
        return sp.diags(np.concatenate([np.ones(n), -np.ones(n)])).tocsr()

    def sigma1_matrix(self) -> sp.csr_matrix:
        n = self.size
        eye = sp.identity(n, format="csr")
        return sp.bmat([[None, eye], [eye, None]], format="csr")

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix() @ vec

    def inner(self, f: np.ndarray, g: np.ndarray) -> complex:
        """L^2(R^3, C^2) product of two stacked line vectors, linear in f."""
        return complex(4.0 * np.pi * self.step * np.sum(f * np.conj(g)))

    def norm(self, f: np.ndarray) -> float:
        return float(np.sqrt(self.inner(f, f).real))

    @staticmethod
    def sigma1(vec: np.ndarray) -> np.ndarray:
        n = vec.size // 2
        return np.concatenate([vec[n:], vec[:n]])

    @staticmethod
    def sigma3(vec: np.ndarray) -> np.ndarray:
        n = vec.size // 2
        return np.concatenate([vec[:n], -vec[n:]])

    def stack(self, up: np.ndarray, down: np.ndarray) -> np.ndarray:
        return np.concatenate([np.asarray(up, dtype=complex), np.asarray(down, dtype=complex)])

    def spinor(self, vec: np.ndarray) -> SpinorField:
        """zeta = phi / rho as a SpinorField on ``grid``."""
        n = self.size
        up = ComplexField(self.grid, vec[:n] / self.nodes, "none")
        down = ComplexField(self.grid, vec[n:] / self.nodes, "none")
        return SpinorField(up, down)

    def zero_modes(self) -> Dict[str, np.ndarray]:
        """rho W (1, -1) and rho W1 (1, 1)."""
        w = self.nodes * GroundStateKernel.w(self.nodes)
        w1 = self.nodes * GroundStateKernel.w1(self.nodes)
        return {"W": self.stack(w, -w), "W1": self.stack(w1, w1)}

    def xi_modes(self) -> Tuple[np.ndarray, np.ndarray]:
        """rho xi_0 = rho W (1,-1)/sqrt3 and rho xi_1 = -2 rho W1 (1,1)/sqrt3."""
        modes = self.zero_modes()
        return modes["W"] / np.sqrt(3.0), -2.0 * modes["W1"] / np.sqrt(3.0)

    def zero_mode_residuals(self, window: Optional[float] = None) -> Dict[str, float]:
        """Relative residual |H z| / |z| restricted to rho <= window (default R/2)."""
        limit = window if window is not None else 0.5 * self.radius
        inside = np.tile(self.nodes <= limit, 2)
        out = {}
        for name, mode in self.zero_modes().items():
            image = self.apply(mode)
            out[name] = float(np.linalg.norm(image[inside]) / np.linalg.norm(mode[inside]))
        return out

    def symmetry_defects(self) -> Dict[str, float]:
        """Max-entry defects of sigma1 H sigma1 + H and sigma3 H sigma3 - H^T."""
        h = self.matrix()
        s1, s3 = self.sigma1_matrix(), self.sigma3_matrix()
        anti = s1 @ h @ s1 + h
        adjoint = s3 @ h @ s3 - h.T
        return {
            "sigma1": float(abs(anti).max()) if anti.nnz else 0.0,
            "sigma3": float(abs(adjoint).max()) if adjoint.nnz else 0.0,
        }


@dataclass(frozen=True, eq=False)
class EigenData:
    """Unstable pair H zeta_+/- = +/- i lambda0 zeta_+/-.

    zeta_+ is normalized to unit L^2 norm with zeta_- = sigma1 zeta_+ = conj zeta_+, which
    forces the second component of zeta_+ to be the conjugate of the first; the remaining sign
    makes Re of the first component positive where it peaks.
    """

    operator: LinearizedOperator
    lambda0: float
    zeta_plus: np.ndarray
    zeta_minus: np.ndarray
    pairing: complex
    residual: float
    spectrum: np.ndarray

    def project_plus(self, f: np.ndarray) -> np.ndarray:
        coeff = self.operator.inner(f, self.operator.sigma3(self.zeta_minus)) / self.pairing
        return coeff * self.zeta_plus

    @property
    def minus_pairing(self) -> complex:
        """<zeta_-, sigma3 zeta_+>, equal to -pairing under the conjugation convention."""
        return self.operator.inner(self.zeta_minus, self.operator.sigma3(self.zeta_plus))

    def project_minus(self, f: np.ndarray) -> np.ndarray:
        coeff = self.operator.inner(f, self.operator.sigma3(self.zeta_plus)) / self.minus_pairing
        return coeff * self.zeta_minus

    def coefficients(self, f: np.ndarray) -> Tuple[complex, complex]:
        """(a+, a-) with P+ f = a+ zeta_+ and P- f = a- zeta_-."""
        op = self.operator
        plus = op.inner(f, op.sigma3(self.zeta_minus)) / self.pairing
        minus = op.inner(f, op.sigma3(self.zeta_plus)) / self.minus_pairing
        return plus, minus

    def project(self, f: np.ndarray) -> np.ndarray:
        """P = I - P+ - P-."""
        return f - self.project_plus(f) - self.project_minus(f)

    def spinors(self) -> Tuple[SpinorField, SpinorField]:
        return self.operator.spinor(self.zeta_plus), self.operator.spinor(self.zeta_minus)

    def spectral_symmetry(self, count: int = 10) -> float:
        """Max distance from -lambda to the spectrum over the ``count`` smallest |lambda|."""
        eigs = self.spectrum
        smallest = eigs[np.argsort(np.abs(eigs))[:count]]
        return float(max(np.min(np.abs(eigs + lam)) for lam in smallest))


def _normalize(op: LinearizedOperator, vec: np.ndarray) -> np.ndarray:
    n = op.size
    u, v = vec[:n], vec[n:]
    j = int(np.argmax(np.abs(u)))
    theta = 0.5 * np.angle(np.conj(u[j]) / v[j])
    u = np.exp(1j * theta) * u
    if u[j].real < 0.0:
        u = -u
    u = u / np.sqrt(2.0 * 4.0 * np.pi * op.step * np.sum(np.abs(u) ** 2))
    return op.stack(u, np.conj(u))


def eigenpairs(op: LinearizedOperator, gate: float = 1e-6) -> EigenData:
    """Dense eigensolve of H and selection of the purely imaginary pair.

    Args:
        op: Discretized operator; the radius should resolve the W^4 decay (>= 50)
        gate: Admissible |Re lambda| / |Im lambda|

    Returns:
        Eigen data with the conjugation convention enforced

    Raises:
        ResolutionError: When no eigenvalue passes the gate
    """
    dense = op.matrix().toarray()
    values, vectors = la.eig(dense)
    imaginary = (np.abs(values.real) < gate * np.abs(values.imag)) & (values.imag > 0.0)
    if not np.any(imaginary):
        raise ResolutionError(
            "no purely imaginary eigenvalue passed the symmetry gate",
            {"gate": gate, "radius": op.radius, "step": op.step},
        )
    candidates = np.flatnonzero(imaginary)
    index = candidates[np.argmax(values.imag[candidates])]
    lambda0 = float(values[index].imag)
    zeta_plus = _normalize(op, vectors[:, index])
    zeta_minus = op.sigma1(zeta_plus)
    pairing = op.inner(zeta_plus, op.sigma3(zeta_minus))
    image = op.apply(zeta_plus) - 1j * lambda0 * zeta_plus
    residual = op.norm(image) / op.norm(zeta_plus)
    if abs(pairing) < 1e-12:
        raise ResolutionError("eigenmode pairing vanishes", {"pairing": abs(pairing)})
    logger.info(
        "eigenpair_found",
        lambda0=lambda0,
        residual=residual,
        pairing=abs(pairing),
        candidates=int(candidates.size),
    )
    return EigenData(
        operator=op,
        lambda0=lambda0,
        zeta_plus=zeta_plus,
        zeta_minus=zeta_minus,
        pairing=pairing,
        residual=float(residual),
        spectrum=values,
    )
