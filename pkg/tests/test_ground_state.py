"""Closed-form ground state, its zero-energy solutions and the energy functional."""

import numpy as np
import pytest

from src.profiles.ground_state import (
    ENERGY_W,
    GRAD_W_SQUARED,
    GroundStateKernel,
    apply_L,
    energy_functional,
    eval_ground,
    ground_field,
    ground_identities,
    rescaled_ground,
)
from src.numerics.grid import make_grid
from src.utils.config import GridSpec
from src.utils.errors import DomainError, SingularityError


class TestClosedForms:
    def test_origin_values(self):
        assert eval_ground("W", 0.0) == pytest.approx(1.0)
        assert eval_ground("W1", 0.0) == pytest.approx(0.5)

    def test_theta_is_singular_at_origin(self):
        with pytest.raises(SingularityError):
            eval_ground("ThetaPlus", np.array([0.0, 1.0]))

    def test_negative_radius(self):
        with pytest.raises(DomainError):
            eval_ground("W", -1.0)

    def test_unknown_name(self):
        with pytest.raises(DomainError):
            eval_ground("V", 1.0)  # type: ignore[arg-type]

    def test_numerators_at_origin(self):
        assert GroundStateKernel.numerator_minus(np.array([0.0]))[0] == pytest.approx(-1.0)
        assert GroundStateKernel.numerator_plus(np.array([0.0]))[0] == pytest.approx(-2.0)

    @pytest.mark.parametrize("sign", ["+", "-"])
    def test_wronskian_normalization(self, sign):
        rho = np.linspace(0.5, 50.0, 25)
        theta = GroundStateKernel.theta(sign, rho)
        dtheta = GroundStateKernel.dtheta(sign, rho)
        phi = GroundStateKernel.phi(sign, rho)
        dphi = GroundStateKernel.dphi(sign, rho)
        assert np.allclose(rho**2 * (dtheta * phi - theta * dphi), 1.0, atol=1e-10)

    def test_tail_coefficients(self):
        assert GroundStateKernel.tail_coefficient(-1) == pytest.approx(np.sqrt(3.0))
        assert GroundStateKernel.tail_coefficient(-3) == pytest.approx(-1.5 * np.sqrt(3.0))
        assert GroundStateKernel.tail_coefficient(-2) == 0.0
        assert GroundStateKernel.tail_coefficient(1) == 0.0

    def test_dw_matches_finite_difference(self):
        rho = np.array([0.3, 1.0, 4.0])
        h = 1e-6
        fd = (GroundStateKernel.w(rho + h) - GroundStateKernel.w(rho - h)) / (2.0 * h)
        assert np.allclose(GroundStateKernel.dw(rho), fd, atol=1e-8)


class TestIdentities:
    def test_ground_identities(self, graded_grid):
        identities = ground_identities(graded_grid)
        assert identities["stationary"] < 1e-6
        assert identities["L_minus_W"] < 1e-6
        assert identities["L_plus_W1"] < 1e-6
        assert identities["pohozaev"] < 1e-5
        assert identities["gradient_constant"] < 1e-5

    def test_zero_energy_solution_theta(self):
        grid = make_grid(GridSpec.uniform(start=0.5, end=30.0, count=2951))
        theta = ground_field(grid, "ThetaMinus")
        image = apply_L("-", theta).values
        window = (theta.nodes > 1.0) & (theta.nodes < 20.0)
        scale = np.max(np.abs(theta.values[window]))
        assert np.max(np.abs(image[window])) < 1e-5 * scale

    def test_energy_is_phase_invariant_and_matches_closed_form(self, graded_grid):
        base = rescaled_ground(graded_grid, 1.0)
        rotated = rescaled_ground(graded_grid, 1.0, phase=0.7)
        e0 = energy_functional(base)
        assert energy_functional(rotated) == pytest.approx(e0, rel=1e-12)
        # the grid stops at rho = 2000, where the W tail still carries ~1e-3 of the energy
        assert e0 == pytest.approx(ENERGY_W, rel=5e-3)
        assert ENERGY_W == pytest.approx(2.0 * GRAD_W_SQUARED / 3.0)
