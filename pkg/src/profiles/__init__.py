"""Ground state, region profiles and the glued approximate solution."""

from .ground_state import (
    GroundStateKernel,
    apply_L,
    energy_functional,
    eval_ground,
    ground_field,
    ground_identities,
)
from .gluing import (
    GlobalApprox,
    build_global_approx,
    delta_scaling,
    glue_psi_ap,
    global_residual,
    sample_window,
    residual_bounds_check,
)
from .inner import (
    InnerSeries,
    build_inner_series,
    fit_tail_coeffs,
    inner_residual,
    order_residuals,
    solve_chi_k,
)
from .remote import (
    CutoffFamily,
    RemoteProfile,
    eval_remote,
    free_evolution_gap,
    remote_gradient_norms,
    zeta_star,
)
from .self_similar import SelfSimilarSolution, connection_coeffs, continue_ode, solve_A_system

__all__ = [
    "CutoffFamily",
    "GlobalApprox",
    "GroundStateKernel",
    "InnerSeries",
    "RemoteProfile",
    "SelfSimilarSolution",
    "apply_L",
    "build_global_approx",
    "build_inner_series",
    "connection_coeffs",
    "continue_ode",
    "delta_scaling",
    "energy_functional",
    "eval_ground",
    "eval_remote",
    "fit_tail_coeffs",
    "free_evolution_gap",
    "global_residual",
    "glue_psi_ap",
    "ground_field",
    "ground_identities",
    "inner_residual",
    "order_residuals",
    "remote_gradient_norms",
    "sample_window",
    "solve_A_system",
    "solve_chi_k",
    "residual_bounds_check",
    "zeta_star",
]
