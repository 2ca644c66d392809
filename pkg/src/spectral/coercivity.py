"""Constrained Rayleigh quotients of <Hf, sigma3 f>.

Spinors are restricted to the conjugation-symmetric class f = (a + ib, a - ib) with a, b real,
which H preserves. On that class

    <Hf, sigma3 f> = 2 * 4 pi h (a.L+ a + b.L- b),  L+ = -D2 - 5W^4,  L- = -D2 - W^4,

and every complex constraint <f, g> = 0 becomes two real rows. Minima are computed by a
generalized symmetric eigensolve on the null space of the constraint rows.
"""

from dataclasses import dataclass
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
import scipy.linalg as la

from ..profiles.ground_state import GroundStateKernel
from ..utils.errors import ConstraintError, DependencyError, DomainError
from ..utils.logger import get_logger
from .operator import EigenData, LinearizedOperator
from .transform import QuasiResonant, TransformKernel, regrid

logger = get_logger(__name__)

ConstraintSet = Literal["none", "eigenmodes", "dm", "orthogonal"]
FormKind = Literal["gradient", "energy"]

_REQUIRED_RANK = {"none": 0, "eigenmodes": 2, "dm": 4, "orthogonal": 4}


@dataclass(frozen=True)
class CoercivityResult:
    """Minimal quotient under one constraint set.

    Attributes:
        form: ``gradient`` (normalized by ||grad f||^2) or ``energy`` (penalized, by ||f||_{H^1}^2)
        constraints: Name of the constraint set
        kappa: Cutoff scale used by the constraints or the penalty
        minimum: Smallest generalized eigenvalue
        constant: minimum/kappa (gradient) or minimum/kappa^3 (energy)
        rank: Numerical rank of the real constraint rows
    """

    form: str
    constraints: str
    kappa: float
    minimum: float
    constant: float
    rank: int

    def to_row(self) -> Dict[str, object]:
        return {
            "form": self.form,
            "constraints": self.constraints,
            "kappa": self.kappa,
            "minimum": self.minimum,
            "constant": self.constant,
            "rank": self.rank,
        }


def _symmetric(matrix) -> np.ndarray:
    dense = matrix.toarray() if hasattr(matrix, "toarray") else np.asarray(matrix)
    return 0.5 * (dense + dense.T)


def quadratic_blocks(op: LinearizedOperator) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Real matrices (Q, G1dot, G0) of <Hf, sigma3 f>, ||grad f||^2 and ||f||^2 in (a, b)."""
    measure = 2.0 * 4.0 * np.pi * op.step
    lap = _symmetric(-op.second)
    w4 = op.potential_scale * GroundStateKernel.w(op.nodes) ** 4
    l_plus = lap - np.diag(5.0 * w4)
    l_minus = lap - np.diag(w4)
    q = measure * la.block_diag(l_plus, l_minus)
    grad = measure * la.block_diag(lap, lap)
    mass = measure * np.eye(2 * op.size)
    return q, grad, mass


def _rows(op: LinearizedOperator, g: np.ndarray) -> np.ndarray:
    """Real rows of <f, g> = 0 in the (a, b) coordinates."""
    n = op.size
    g1, g2 = np.conj(g[:n]), np.conj(g[n:])
    complex_row = np.concatenate([g1 + g2, 1j * (g1 - g2)])
    return np.stack([complex_row.real, complex_row.imag])


def _laplacian_xi(op: LinearizedOperator) -> List[np.ndarray]:
    """rho * Delta xi_0 and rho * Delta xi_1 in closed form."""
    rho = op.nodes
    w = GroundStateKernel.w(rho)
    w1 = GroundStateKernel.w1(rho)
    lap0 = -rho * w**5 / np.sqrt(3.0)
    lap1 = 10.0 * rho * w**4 * w1 / np.sqrt(3.0)
    return [op.stack(lap0, -lap0), op.stack(lap1, lap1)]


def constraint_rows(
    op: LinearizedOperator,
    constraints: ConstraintSet,
    eigen: Optional[EigenData] = None,
    resonant: Optional[QuasiResonant] = None,
    resonant_nodes: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Real constraint matrix with 2n columns.

    Raises:
        DependencyError: When eigen or quasi-resonant data are missing for the set
        DomainError: For an unknown set
    """
    if constraints not in _REQUIRED_RANK:
        raise DomainError(f"unknown constraint set {constraints!r}")
    if constraints == "none":
        return np.zeros((0, 2 * op.size))
    if eigen is None:
        raise DependencyError("constraint set needs the unstable eigenpair", {"set": constraints})
    targets = [op.sigma3(eigen.zeta_plus), op.sigma3(eigen.zeta_minus)]
    if constraints == "dm":
        targets.extend(_laplacian_xi(op))
    elif constraints == "orthogonal":
        if resonant is None or resonant_nodes is None:
            raise DependencyError("constraint set needs h_kappa", {"set": constraints})
        h = regrid(resonant.line, resonant_nodes, op.nodes)
        targets.extend([op.sigma3(h), op.sigma3(op.sigma1(np.conj(h)))])
    return np.concatenate([_rows(op, g) for g in targets])


def _reduced_minimum(
    q: np.ndarray, gram: np.ndarray, rows: np.ndarray, required: int, label: str
) -> Tuple[float, int]:
    if rows.shape[0] == 0:
        basis = np.eye(q.shape[0])
        rank = 0
    else:
        scaled = rows / np.linalg.norm(rows, axis=1, keepdims=True).clip(min=1e-300)
        singular = la.svdvals(scaled)
        rank = int(np.sum(singular > 1e-10 * singular[0]))
        if rank < required:
            raise ConstraintError(
                "constraint rows are rank deficient",
                {"set": label, "rank": rank, "required": required},
            )
        basis = la.null_space(scaled, rcond=1e-10)
    q_r = basis.T @ q @ basis
    g_r = basis.T @ gram @ basis
    values = la.eigh(
        0.5 * (q_r + q_r.T), 0.5 * (g_r + g_r.T), eigvals_only=True, subset_by_index=[0, 0]
    )
    return float(values[0]), rank


def _penalty(op: LinearizedOperator, kernel: TransformKernel) -> np.ndarray:
    """Real matrix of ||E*_kappa sigma3 f||^2 in (a, b) coordinates."""
    n = op.size
    if n > kernel.size or not np.isclose(op.step, kernel.step):
        raise DomainError("operator grid is not a prefix of the transform grid")
    e = kernel.kernel[:, :n, :]
    scale = (np.sqrt(2.0) * kernel.theta * kernel.step)[:, None]
    # columns act on (up, down) of sigma3 f
    first = scale * np.concatenate([np.conj(e[:, :, 0]), -np.conj(e[:, :, 1])], axis=1)
    second = scale * np.concatenate([e[:, :, 1], -e[:, :, 0]], axis=1)
    analysis = np.concatenate([first, second])
    eye = np.eye(n)
    symmetric_map = np.block([[eye, 1j * eye], [eye, -1j * eye]])
    image = analysis @ symmetric_map
    weights = np.concatenate([kernel.weights, kernel.weights])
    return (image.conj().T @ (weights[:, None] * image)).real


def coercivity_check(
    op: LinearizedOperator,
    kappa: float,
    constraints: ConstraintSet = "orthogonal",
    form: FormKind = "gradient",
    eigen: Optional[EigenData] = None,
    resonant: Optional[QuasiResonant] = None,
    kernel: Optional[TransformKernel] = None,
    penalty_constant: float = 1.0,
) -> CoercivityResult:
    """Minimal Rayleigh quotient of <Hf, sigma3 f> under a constraint set.

    Args:
        op: Discretized operator
        kappa: Cutoff scale
        constraints: none, eigenmodes (zeta+/-), dm (zeta+/- and Delta xi_j) or orthogonal
            (zeta+/-, h_kappa and sigma1 conj h_kappa)
        form: ``gradient`` divides by ||grad f||^2; ``energy`` adds (kappa/C)||E* sigma3 f||^2
            and divides by ||f||_{H^1}^2
        eigen: Unstable eigenpair, needed by every constrained set
        resonant: h_kappa, needed by ``orthogonal``
        kernel: Transform kernel, needed by ``energy`` and to place h_kappa
        penalty_constant: C in the penalty coefficient kappa/C

    Returns:
        Minimum and the fitted constant

    Raises:
        ConstraintError: If the constraint rows are rank deficient
        DependencyError: If required data are missing
    """
    q, grad, mass = quadratic_blocks(op)
    nodes = kernel.nodes if kernel is not None else None
    rows = constraint_rows(op, constraints, eigen, resonant, nodes)
    if form == "gradient":
        gram, power = grad, 1
    elif form == "energy":
        if kernel is None:
            raise DependencyError("energy form needs the transform kernel")
        q = q + (kappa / penalty_constant) * _penalty(op, kernel)
        gram, power = grad + mass, 3
    else:
        raise DomainError(f"unknown form {form!r}")
    minimum, rank = _reduced_minimum(q, gram, rows, _REQUIRED_RANK[constraints], constraints)
    result = CoercivityResult(
        form=form,
        constraints=constraints,
        kappa=kappa,
        minimum=minimum,
        constant=minimum / kappa**power,
        rank=rank,
    )
    logger.info("coercivity_measured", **result.to_row())
    return result


def gradient_control(op: LinearizedOperator, kernel: TransformKernel) -> CoercivityResult:
    """Smallest ||grad f||^2/||f||_{H^1}^2 under E*_kappa f = 0.

    ``constant`` is the C in ||f||_{H^1} <= (C/kappa)||grad f||, i.e. kappa/sqrt(minimum).
    """
    n = op.size
    if n > kernel.size or not np.isclose(op.step, kernel.step):
        raise DomainError("operator grid is not a prefix of the transform grid")
    e = kernel.kernel[:, :n, :]
    first = np.concatenate([np.conj(e[:, :, 0]), np.conj(e[:, :, 1])], axis=1)
    second = np.concatenate([e[:, :, 1], e[:, :, 0]], axis=1)
    eye = np.eye(n)
    image = np.concatenate([first, second]) @ np.block([[eye, 1j * eye], [eye, -1j * eye]])
    active = np.concatenate([kernel.theta, kernel.theta]) > 0.0
    rows = np.concatenate([image[active].real, image[active].imag])
    _, grad, mass = quadratic_blocks(op)
    minimum, rank = _reduced_minimum(grad, grad + mass, rows, 1, "transform")
    result = CoercivityResult(
        form="h1_control",
        constraints="transform",
        kappa=kernel.kappa,
        minimum=minimum,
        constant=kernel.kappa / np.sqrt(minimum),
        rank=rank,
    )
    logger.info("gradient_control_measured", **result.to_row())
    return result
