"""Linearized operator, scattering theory and linear flow around the ground state."""

from .coercivity import CoercivityResult, coercivity_check, gradient_control
from .jost import JostSolution, JostSolver, ScatteringTable, jost_solve, scattering_data
from .operator import EigenData, LinearizedOperator, eigenpairs
from .propagator import LinearPropagator, PropagatorRun, probe_spinor, propagator
from .transform import (
    QuasiResonant,
    TransformKernel,
    build_kernel,
    distorted_transform,
    quasi_resonant,
)

__all__ = [
    "CoercivityResult",
    "EigenData",
    "JostSolution",
    "JostSolver",
    "LinearPropagator",
    "LinearizedOperator",
    "PropagatorRun",
    "QuasiResonant",
    "ScatteringTable",
    "TransformKernel",
    "build_kernel",
    "coercivity_check",
    "distorted_transform",
    "eigenpairs",
    "gradient_control",
    "jost_solve",
    "probe_spinor",
    "propagator",
    "quasi_resonant",
    "scattering_data",
]
