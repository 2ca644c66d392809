"""Validity window and the glued approximate solution."""

import numpy as np
import pytest

from src.profiles.gluing import (
    build_global_approx,
    global_residual,
    glue_psi_ap,
    residual_bounds_check,
    sample_window,
    validity_start,
)
from src.profiles.inner import build_inner_series
from src.profiles.remote import eval_remote
from src.profiles.self_similar import assemble_ss, solve_A_system
from src.utils.config import InnerConfig, Params, RemoteConfig, SelfSimilarConfig
from src.utils.errors import DomainError

EPS1 = 1.04 / 27.0


class TestValidityStart:
    def test_remote_condition_dominates_for_small_delta(self):
        start = validity_start(Params(delta=0.5), EPS1, 0.375, 10.0)
        assert start == pytest.approx(256.0, rel=1e-6)

    def test_floor_dominates_for_unit_delta(self):
        assert validity_start(Params(delta=1.0), EPS1, 0.375, 10.0) == 10.0

    def test_seam_condition(self):
        start = validity_start(Params(delta=1.0), EPS1, 0.375, 1.0)
        assert start == pytest.approx(2.0 ** (1.0 / (EPS1 + 0.375)))
        assert 2.0 * start ** (0.5 - EPS1) <= start ** 0.875 * (1.0 + 1e-9)


@pytest.fixture(scope="module")
def approx():
    params = Params()
    inner = build_inner_series(params, InnerConfig())
    solution = solve_A_system(params, inner, SelfSimilarConfig())
    return build_global_approx(inner, solution, RemoteConfig())


@pytest.mark.slow
class TestGlobalApprox:
    def test_window(self, approx):
        assert approx.t_min == pytest.approx(256.0, rel=1e-6)
        assert approx.t_max > approx.t_min
        with pytest.raises(DomainError):
            approx.check_time(100.0)

    def test_residual_is_finite(self, approx):
        report = global_residual(approx, 300.0)
        assert all(np.isfinite(v) for v in report.norms.values())
        assert set(report.parts) == {"E1", "E2", "E3", "E4"}
        assert report.to_row()["t"] == 300.0

    def test_window_sampling(self, approx):
        x = np.array([1.0, 50.0, 120.0])
        psi, residual = sample_window(approx, x, 300.0)
        assert psi.shape == residual.shape == x.shape
        assert np.all(np.isfinite(psi))

    def test_glued_state_stays_near_ground_state(self, approx):
        state = glue_psi_ap(approx, 300.0)
        assert np.all(np.isfinite(state.psi.values))
        core = state.chi.nodes <= 5.0
        assert np.max(np.abs(state.chi.values[core])) < 0.2

    def test_remote_evaluation(self, approx):
        value = eval_remote(200.0, 300.0, approx.remote)
        assert isinstance(value, complex)
        assert np.isfinite(value)
        with pytest.raises(DomainError):
            eval_remote(1.0, 300.0, approx.remote)

    def test_self_similar_assembly(self, approx):
        assembly = assemble_ss(approx.solution, 300.0, approx.eps1, approx.eps2)
        lo, hi = assembly.region
        assert 0.0 < lo < hi
        assert len(assembly.residual_l2) == 6
        assert all(np.isfinite(v) for v in assembly.residual_l2.values())
        with pytest.raises(DomainError):
            assemble_ss(approx.solution, 5.0, approx.eps1, approx.eps2)

    def test_bounds_report(self, approx):
        bounds = residual_bounds_check(approx, [300.0, 400.0])
        assert len(bounds.rows) == 2
        assert {"zeta_sup", "zeta_weighted_sup", "chi_sup", "zeta_small"} <= set(bounds.passed)
