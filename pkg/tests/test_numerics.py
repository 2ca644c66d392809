"""Radial grids, quadrature, derivative stencils and norms."""

import numpy as np
import pytest

from src.numerics.fields import (
    ComplexField,
    SpinorField,
    log_slope,
    norm,
    radial_derivative,
    weighted_norm,
)
from src.numerics.grid import line_second_difference, make_grid, origin_value, uniform_line
from src.utils.config import GridSpec, ZoneSpec
from src.utils.errors import (
    ConfigurationError,
    DomainError,
    GridConfigurationError,
    NumericError,
    UnsupportedOperationError,
)


class TestGrid:
    def test_shared_zone_endpoints_appear_once(self):
        grid = make_grid(
            GridSpec(
                zones=[
                    ZoneSpec(start=0.0, end=1.0, count=11),
                    ZoneSpec(start=1.0, end=10.0, count=21, law="geometric"),
                ]
            )
        )
        assert grid.size == 31
        assert np.all(np.diff(grid.nodes) > 0.0)
        assert grid.has_origin

    def test_gap_between_zones_is_rejected(self):
        spec = GridSpec(
            zones=[ZoneSpec(start=0.0, end=1.0, count=11), ZoneSpec(start=1.5, end=3.0, count=11)]
        )
        with pytest.raises(GridConfigurationError):
            make_grid(spec)

    def test_overlapping_zones_are_rejected(self):
        spec = GridSpec(
            zones=[ZoneSpec(start=0.0, end=2.0, count=11), ZoneSpec(start=1.0, end=3.0, count=11)]
        )
        with pytest.raises(GridConfigurationError):
            make_grid(spec)

    def test_quadrature_is_exact_for_low_degree(self, uniform_grid):
        # int_0^8 rho^2 d rho
        assert uniform_grid.integrate(np.ones(uniform_grid.size)).real == pytest.approx(
            8.0**3 / 3.0, rel=1e-12
        )

    def test_gaussian_moment_on_graded_grid(self, graded_grid):
        values = np.exp(-graded_grid.nodes**2)
        assert graded_grid.integrate(values).real == pytest.approx(np.sqrt(np.pi) / 4.0, rel=1e-8)

    def test_cumulative_ends_at_the_full_integral(self, uniform_grid):
        values = np.cos(uniform_grid.nodes)
        running = uniform_grid.cumulative(values)
        assert running[0] == 0.0
        assert running[-1] == pytest.approx(uniform_grid.integrate_plain(values).real, abs=1e-12)

    def test_unsupported_derivative_order(self, uniform_grid):
        with pytest.raises(UnsupportedOperationError):
            uniform_grid.derivative_matrix(3)


class TestFields:
    def test_laplacian_of_gaussian(self, uniform_grid):
        rho = uniform_grid.nodes
        f = ComplexField(uniform_grid, np.exp(-(rho**2)), "even")
        exact = (4.0 * rho**2 - 6.0) * np.exp(-(rho**2))
        inside = rho <= 6.0
        assert np.max(np.abs(f.laplacian().values - exact)[inside]) < 1e-6

    def test_radial_derivative_of_gaussian(self, uniform_grid):
        rho = uniform_grid.nodes
        f = ComplexField(uniform_grid, np.exp(-(rho**2)), "even")
        inside = rho <= 6.0
        first = radial_derivative(f, 1).values
        second = radial_derivative(f, 2).values
        assert np.max(np.abs(first + 2.0 * rho * np.exp(-(rho**2)))[inside]) < 1e-6
        assert np.max(np.abs(second - (4.0 * rho**2 - 2.0) * np.exp(-(rho**2)))[inside]) < 1e-6
        with pytest.raises(UnsupportedOperationError):
            radial_derivative(f, 3)

    def test_first_derivative_flips_parity(self, uniform_grid):
        f = ComplexField(uniform_grid, np.exp(-uniform_grid.nodes**2), "even")
        assert f.derivative(1).parity == "odd"
        assert f.derivative(2).parity == "even"

    def test_odd_field_must_vanish_at_origin(self, uniform_grid):
        with pytest.raises(ConfigurationError):
            ComplexField(uniform_grid, np.ones(uniform_grid.size), "odd")

    def test_length_mismatch(self, uniform_grid):
        with pytest.raises(ConfigurationError):
            ComplexField(uniform_grid, np.ones(3))

    def test_interpolation_outside_grid(self, uniform_grid):
        f = ComplexField(uniform_grid, np.exp(-uniform_grid.nodes**2), "even")
        with pytest.raises(DomainError):
            f.interpolate(np.array([9.0]))

    def test_interpolation_is_accurate(self, uniform_grid):
        f = ComplexField(uniform_grid, np.exp(-uniform_grid.nodes**2), "even")
        radii = np.array([0.123, 1.777, 3.3])
        assert np.allclose(f.interpolate(radii), np.exp(-(radii**2)), atol=1e-9)

    def test_fields_on_different_grids_do_not_mix(self, uniform_grid):
        other = make_grid(GridSpec.uniform(end=8.0, count=801))
        a = ComplexField(uniform_grid, np.ones(uniform_grid.size))
        b = ComplexField(other, np.ones(other.size))
        with pytest.raises(ConfigurationError):
            _ = a + b

    def test_conjugate_symmetric_spinor(self, uniform_grid):
        f = ComplexField(uniform_grid, (1.0 + 2.0j) * np.exp(-uniform_grid.nodes**2))
        spinor = SpinorField.from_scalar(f)
        assert spinor.conjugate_symmetric
        with pytest.raises(ConfigurationError):
            SpinorField(f, f, conjugate_symmetric=True)


class TestNorms:
    def test_gradient_norm_of_gaussian(self, uniform_grid):
        f = ComplexField(uniform_grid, np.exp(-uniform_grid.nodes**2), "even")
        # 4 pi int 4 rho^4 e^{-2 rho^2} d rho
        exact = np.sqrt(16.0 * np.pi * 3.0 * np.sqrt(np.pi) / (8.0 * 2.0**2.5))
        assert norm(f, "Hdot1") == pytest.approx(exact, rel=1e-6)

    def test_l2_norm_of_gaussian(self, uniform_grid):
        f = ComplexField(uniform_grid, np.exp(-uniform_grid.nodes**2), "even")
        exact = np.sqrt(4.0 * np.pi * np.sqrt(np.pi) / (4.0 * 2.0**1.5))
        assert norm(f, "L2") == pytest.approx(exact, rel=1e-8)

    def test_sup_weighted(self, uniform_grid):
        f = ComplexField(uniform_grid, np.ones(uniform_grid.size), "even")
        assert norm(f, "SupWeighted", exponent=1.0) == pytest.approx(1.0)

    def test_window_restricts_the_measure(self, uniform_grid):
        f = ComplexField(uniform_grid, np.ones(uniform_grid.size), "even")
        inner = norm(f, "L2", window=(0.0, 1.0))
        assert inner == pytest.approx(np.sqrt(4.0 * np.pi / 3.0), rel=0.05)
        assert inner < norm(f, "L2")

    def test_non_finite_samples(self, uniform_grid):
        values = np.ones(uniform_grid.size)
        values[5] = np.nan
        with pytest.raises(NumericError):
            norm(ComplexField(uniform_grid, values), "L2")

    def test_unknown_kind(self, uniform_grid):
        with pytest.raises(UnsupportedOperationError):
            norm(ComplexField.zeros(uniform_grid), "H3")  # type: ignore[arg-type]

    def test_weighted_norm_without_weight_matches_l2(self, uniform_grid):
        f = ComplexField(uniform_grid, np.exp(-uniform_grid.nodes**2), "even")
        assert weighted_norm(f, 0, 0) * np.sqrt(4.0 * np.pi) == pytest.approx(norm(f, "L2"))

    def test_log_slope(self):
        x = np.array([1.0, 10.0, 100.0])
        assert log_slope(x, 3.0 * x**-2) == pytest.approx(-2.0)
        assert np.isnan(log_slope(x, [1.0, 0.0, 1.0]))


class TestLineOperators:
    def test_second_difference_is_symmetric(self):
        for far in ("neumann", "dirichlet"):
            d2 = line_second_difference(50, 0.1, far=far)
            assert abs(d2 - d2.T).max() < 1e-9

    def test_second_difference_of_odd_extension(self):
        nodes = uniform_line(400, 0.02)
        phi = nodes * np.exp(-(nodes**2))
        d2 = line_second_difference(nodes.size, 0.02, far="dirichlet") @ phi
        exact = (4.0 * nodes**3 - 6.0 * nodes) * np.exp(-(nodes**2))
        assert np.max(np.abs(d2 - exact)[nodes < 5.0]) < 1e-7

    def test_unknown_far_boundary(self):
        with pytest.raises(UnsupportedOperationError):
            line_second_difference(10, 0.1, far="periodic")

    def test_origin_value_is_exact_for_even_quadratics(self):
        step = 0.1
        nodes = uniform_line(10, step)
        phi = nodes * (1.0 + nodes**2)
        assert origin_value(phi, step) == pytest.approx(1.0, abs=1e-12)
