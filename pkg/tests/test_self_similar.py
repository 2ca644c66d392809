"""Self-similar basis, continuations and the A-system dependencies."""

import numpy as np
import pytest

from src.numerics.fields import ComplexField
from src.numerics.grid import make_grid
from src.profiles.self_similar import (
    SSBasis,
    asymptotic_series,
    connection_coeffs,
    continue_ode,
    mu_index,
    normalized_wronskian,
    origin_coefficients,
    origin_series,
    solve_A_system,
    solve_forced_tail,
)
from src.utils.config import GridSpec, Params, SelfSimilarConfig
from src.utils.errors import DependencyError, DomainError

MU0 = mu_index(Params(), 0)


class TestIndices:
    def test_mu_index(self):
        assert mu_index(Params(nu=0.0, alpha0=0.1), 1) == pytest.approx(0.1 + 0.75j)
        assert mu_index(Params(nu=0.5, alpha0=0.0), 0) == pytest.approx(0.5j)

    def test_origin_recursion_head(self):
        coeffs = origin_coefficients(MU0, "e2", depth=3)
        assert coeffs[0] == 1.0
        assert coeffs[1] == pytest.approx((MU0 + 0.25j) / 6.0)


class TestOriginSeries:
    @pytest.mark.parametrize("which", ["e1", "e2"])
    def test_series_agrees_with_continuation(self, which):
        start = origin_series(MU0, which, 0.5, with_slope=True)
        continued = continue_ode(MU0, start, (0.5, 1.0), samples=60)
        expected = origin_series(MU0, which, 1.0)
        assert continued.values[-1] == pytest.approx(expected, rel=1e-8)

    def test_e2_is_regular(self):
        value, slope = origin_series(MU0, "e2", 0.0, with_slope=True)
        assert value == 1.0
        assert slope == 0.0

    def test_e1_singular_at_origin(self):
        with pytest.raises(DomainError):
            origin_series(MU0, "e1", 0.0)

    def test_outside_series_radius(self):
        with pytest.raises(DomainError):
            origin_series(MU0, "e2", 2.0)

    def test_continuation_needs_positive_radius(self):
        with pytest.raises(DomainError):
            continue_ode(MU0, (1.0, 0.0), (0.0, 1.0))


class TestAsymptoticBasis:
    def test_series_refuses_small_radius(self):
        with pytest.raises(DomainError):
            asymptotic_series(MU0, "M1", 1.0)

    def test_normalized_wronskian(self):
        y = 30.0
        m1, dm1 = asymptotic_series(MU0, "M1", y)
        m2, dm2 = asymptotic_series(MU0, "M2", y)
        w = normalized_wronskian(m1, dm1, m2, dm2, y)
        assert w == pytest.approx(0.5j, rel=1e-6)

    @pytest.mark.slow
    def test_basis_wronskian_is_conserved(self):
        basis = SSBasis.build(MU0, SelfSimilarConfig())
        assert basis.wronskian_drift < 1e-6
        assert basis.connection.shape == (2, 2)
        assert np.all(np.isfinite(basis.connection))

    @pytest.mark.parametrize("which, expected", [("M1", (1.0, 0.0)), ("M2", (0.0, 1.0))])
    @pytest.mark.parametrize("method", ["matrix", "wronskian"])
    def test_connection_of_basis_samples(self, which, expected, method):
        grid = make_grid(GridSpec.uniform(start=25.0, end=35.0, count=2001))
        values, _ = asymptotic_series(MU0, which, grid.nodes)
        sol = ComplexField(grid, values, "none")
        d1, d2 = connection_coeffs(sol, MU0, 30.0, method=method)
        assert abs(d1 - expected[0]) < 1e-6
        assert abs(d2 - expected[1]) < 1e-6


class TestForcedTails:
    def test_unknown_tail(self):
        with pytest.raises(DomainError):
            solve_forced_tail("g3", Params(), {})

    def test_g1_lives_on_one_branch(self):
        tail = solve_forced_tail("g1", Params(), {})
        assert set(tail.decay) == {1}
        assert tail.decay[1] <= tail.expected[1] + 0.5
        value, slope = tail.evaluate([30.0, 40.0])
        assert np.all(np.isfinite(value))
        assert np.all(np.isfinite(slope))


class TestASystem:
    def test_missing_inner_tail(self):
        with pytest.raises(DependencyError):
            solve_A_system(Params(), {(1, 0, 0): 0.1 + 0.0j})
