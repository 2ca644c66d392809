"""Cutoff family, remote coefficient pack and the scattering state."""

import numpy as np
import pytest

from src.numerics.grid import make_grid
from src.profiles.remote import (
    CutoffFamily,
    RemoteProfile,
    free_evolution,
    sobolev_norm,
    zeta_star,
)
from src.utils.config import GridSpec, Params
from src.utils.errors import DomainError, QuadratureError, ResolutionError


@pytest.fixture
def remote():
    params = Params(nu=0.02, alpha0=0.01, delta=0.5)
    return RemoteProfile(
        params=params,
        eps2=0.375,
        d1=(0.2 + 0.1j, 0.05j, 0.01),
        d2=(0.3, 0.2j, 0.1),
        lambda2=0.05,
        cutoff=CutoffFamily(params.delta),
    )


class TestCutoff:
    def test_plateaus_and_midpoint(self):
        values = CutoffFamily.profile(np.array([0.0, 0.5, 1.0, 1.5, 2.0, 3.0]))
        assert np.allclose(values, [1.0, 1.0, 1.0, 0.5, 0.0, 0.0])

    def test_monotone_on_transition(self):
        values = CutoffFamily.profile(np.linspace(1.0, 2.0, 201))
        assert np.all(np.diff(values) <= 0.0)

    @pytest.mark.parametrize("order", [1, 2, 3])
    def test_derivatives_match_differences(self, order):
        r, h = 1.3, 1e-5
        lower = CutoffFamily.profile(np.array([r - h]), order - 1)[0]
        upper = CutoffFamily.profile(np.array([r + h]), order - 1)[0]
        exact = CutoffFamily.profile(np.array([r]), order)[0]
        assert (upper - lower) / (2.0 * h) == pytest.approx(exact, rel=1e-5)

    def test_fourth_derivative_across_transition(self):
        r, h = np.linspace(1.1, 1.9, 17), 1e-5
        third = CutoffFamily.profile(np.concatenate([r - h, r + h]), 3)
        difference = (third[r.size :] - third[: r.size]) / (2.0 * h)
        exact = CutoffFamily.profile(r, 4)
        scale = np.max(np.abs(exact))
        assert np.allclose(difference, exact, rtol=1e-5, atol=1e-6 * scale)

    def test_order_five(self):
        with pytest.raises(DomainError):
            CutoffFamily.profile(1.5, 5)

    def test_scaled_support(self):
        cutoff = CutoffFamily(0.5)
        assert cutoff.theta_delta(np.array([0.4]))[0] == 1.0
        assert cutoff.theta_delta(np.array([1.1]))[0] == 0.0

    def test_tilde_vanishes_off_transition(self):
        assert np.all(CutoffFamily.tilde(np.array([0.5, 2.5])) == 0.0)


class TestCoefficientPack:
    def test_z_derivative(self, remote):
        xi, h = 0.3, 1e-6
        difference = (remote.z(np.array([xi + h])) - remote.z(np.array([xi - h])))[0] / (2 * h)
        assert remote.z(np.array([xi]), 1)[0] == pytest.approx(difference, rel=1e-6)

    def test_fourier_amplitude_support(self, remote):
        amplitude = remote.fourier_amplitude(np.array([0.0, 0.1, 0.5, 0.8]))
        assert amplitude[0] == 0.0
        assert amplitude[1] != 0.0
        assert np.all(amplitude[2:] == 0.0)

    def test_v_hat3_support(self, remote):
        values = remote.v_hat3(np.array([0.3, 0.75, 1.2]))
        assert values[0] == 0.0
        assert values[2] == 0.0

    def test_leading_wave_is_cut(self, remote):
        t = 100.0
        assert remote.v20(np.array([2.5 * remote.delta * t]), t)[0] == 0.0

    def test_sampling_needs_connection_data(self, remote):
        with pytest.raises(DomainError):
            remote.sample(np.array([1e3]), 100.0)


class TestScatteringState:
    def test_divergent_norm(self, remote):
        with pytest.raises(QuadratureError):
            sobolev_norm(remote, 0.4)

    def test_norms_decrease_with_regularity(self, remote):
        low = sobolev_norm(remote, 1.0)
        high = sobolev_norm(remote, 2.0)
        assert np.isfinite(low)
        assert 0.0 < high < low

    def test_free_evolution_resolution_cap(self, remote):
        with pytest.raises(ResolutionError):
            free_evolution(remote, 1e6, np.array([1.0]))

    @pytest.mark.slow
    def test_zeta_star_samples(self, remote):
        grid = make_grid(GridSpec.uniform(end=20.0, count=9))
        zeta = zeta_star(remote, grid, tol=1e-2)
        assert np.all(np.isfinite(zeta.field.values))
        assert len(zeta.sobolev) == 3
        assert zeta.sobolev[1.0] == pytest.approx(sobolev_norm(remote, 1.0))
