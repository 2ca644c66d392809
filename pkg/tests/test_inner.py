"""Inner corrections chi_k, their tails and the truncated inner profile."""

import numpy as np
import pytest

from src.profiles.ground_state import GroundStateKernel, ground_field
from src.profiles.inner import (
    assemble_inner,
    build_forcing,
    correction_norms,
    fit_tail_coeffs,
    inner_residual,
    order_residuals,
    polynomial_degree_check,
    solve_chi_k,
    tail_basis,
)
from src.utils.config import GridSpec, InnerConfig
from src.utils.errors import (
    ConfigurationError,
    DomainError,
    OrderingError,
    TailFitConditioningError,
)


class TestSeries:
    def test_orders_and_origin_data(self, short_inner):
        assert short_inner.order == 3
        for k in range(1, 4):
            chi = short_inner.profile(k)
            assert chi.values[0] == 0.0
            assert np.all(np.isfinite(chi.values))

    def test_each_order_solves_its_linear_problem(self, short_inner):
        residuals = order_residuals(short_inner, window=20.0)
        assert set(residuals) == {1, 2, 3}
        assert max(residuals.values()) < 1e-4

    def test_missing_order(self, short_inner):
        with pytest.raises(OrderingError):
            short_inner.profile(4)
        with pytest.raises(OrderingError):
            short_inner.truncated(5)

    def test_truncation_keeps_lower_orders(self, short_inner):
        shorter = short_inner.truncated(1)
        assert shorter.order == 1
        assert np.array_equal(shorter.profile(1).values, short_inner.profile(1).values)
        assert all(k <= 1 for k in shorter.tails)

    def test_record_has_tail_entries(self, short_inner):
        index, arrays = short_inner.to_record()
        assert index["order"] == 3
        assert arrays["chis"].shape == (3, short_inner.grid.size)

    def test_chi_one_is_linear_in_parameters(self):
        config = InnerConfig(
            order=1,
            enforce_matching_constraint=False,
            grid=GridSpec.graded(core=4.0, core_count=101, end=100.0, tail_count=120),
        )
        check = polynomial_degree_check(1, config)
        assert check["residual"] < 1e-8


class TestForcing:
    def test_first_order_forcing_is_linear_in_parameters(self, short_inner, params):
        rho = short_inner.grid.nodes
        d = build_forcing(1, short_inner)
        expected = -params.alpha0 * GroundStateKernel.w(rho) + 1j * params.nu * (
            GroundStateKernel.w1(rho)
        )
        assert np.allclose(d.up.values, expected, atol=1e-14)
        assert np.allclose(d.down.values, -np.conj(d.up.values))

    def test_solve_reproduces_stored_correction(self, short_inner):
        v_plus, v_minus = solve_chi_k(2, build_forcing(2, short_inner))
        stored = short_inner.profile(2).values
        assert np.allclose(v_plus.values + 1j * v_minus.values, stored, rtol=1e-12, atol=1e-14)

    def test_missing_lower_orders(self, short_inner):
        with pytest.raises(OrderingError):
            build_forcing(5, short_inner)


class TestTailFit:
    def test_basis_of_ground_state(self):
        assert tail_basis(0, 2) == [(0, -1), (0, -2), (0, -3), (0, -4)]

    def test_ground_state_tail(self, short_inner):
        fit = fit_tail_coeffs(ground_field(short_inner.grid, "W"), (40.0, 300.0), 0, depth=3)
        assert fit.coefficient(0, -1).real == pytest.approx(np.sqrt(3.0), rel=1e-5)
        assert fit.residual < 1e-8

    def test_too_few_nodes(self, short_inner):
        with pytest.raises(TailFitConditioningError):
            fit_tail_coeffs(short_inner.profile(1), (390.0, 400.0), 1)


class TestAssembly:
    def test_below_validity_threshold(self, short_inner):
        with pytest.raises(DomainError):
            assemble_inner(short_inner, 5.0)

    def test_region_beyond_grid(self, short_inner):
        with pytest.raises(DomainError):
            assemble_inner(short_inner, 1e4)

    def test_profile_approaches_ground_state(self, short_inner):
        u = assemble_inner(short_inner, 100.0)
        w = ground_field(short_inner.grid, "W")
        window = short_inner.grid.mask((0.0, 5.0))
        assert np.max(np.abs(u.values - w.values)[window]) < 0.1

    def test_corrections_decay_in_time(self, short_inner):
        early = correction_norms(short_inner, 50.0)
        late = correction_norms(short_inner, 500.0)
        assert late["sup"] < early["sup"]

    def test_residual_norms_are_finite(self, short_inner):
        residual = inner_residual(short_inner, 100.0)
        assert set(residual.l2) == {(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (2, 0)}
        assert all(np.isfinite(v) for v in residual.l2.values())
        assert residual.bound > 0.0


class TestMatchingConstraint:
    def test_low_order_is_rejected(self):
        with pytest.raises(ConfigurationError):
            InnerConfig(order=5).check_matching(0.02)

    def test_default_order_is_admissible(self):
        InnerConfig().check_matching(0.02)
