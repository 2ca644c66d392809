"""Radial evolver, bubble modulation fits and the finite-horizon Picard iteration."""

import numpy as np
import pytest

from src.dynamics.evolver import (
    RadialEvolver,
    Trajectory,
    center_tracking,
    dispersive_decay,
    evolve,
    time_reversal_defect,
)
from src.dynamics.modulation import fit_bubble, modulation_fit
from src.dynamics.picard import PicardSolver, TimeMap, ground_background, picard_remainder
from src.numerics.fields import ComplexField
from src.profiles.ground_state import GroundStateKernel, rescaled_ground
from src.utils.config import EvolverConfig, Params, PicardConfig
from src.utils.errors import (
    BlowUpError,
    ConfigurationError,
    DomainError,
    NoBubbleError,
)


@pytest.fixture(scope="module")
def evolver():
    return RadialEvolver(
        EvolverConfig(radius=20.0, step=0.1, dt=1e-3, sponge_width=0.0, sample_every=10)
    )


def bump(evolver, amplitude):
    nodes = evolver.grid.nodes
    return ComplexField(evolver.grid, amplitude * np.exp(-(nodes**2)), "none")


class TestEvolver:
    def test_mass_is_conserved_without_sponge(self, evolver):
        run = evolve(bump(evolver, 0.3), 0.0, 0.1, evolver=evolver)
        assert run.times[0] == 0.0
        assert run.times[-1] == pytest.approx(0.1)
        assert np.max(np.abs(run.mass - run.mass[0])) / run.mass[0] < 1e-10
        assert len(run.to_rows()) == run.times.size

    def test_blow_up_ceiling(self):
        small = RadialEvolver(
            EvolverConfig(radius=10.0, step=0.1, sponge_width=0.0, blowup_ceiling=1.0)
        )
        with pytest.raises(BlowUpError):
            evolve(bump(small, 2.0), 0.0, 0.01, evolver=small)

    def test_split_step_is_reversible(self, evolver):
        assert time_reversal_defect(bump(evolver, 0.5), 0.05, evolver) < 1e-8

    def test_ground_state_is_stationary(self, evolver):
        w = ComplexField(evolver.grid, GroundStateKernel.w(evolver.grid.nodes), "none")
        run = evolve(w, 0.0, 0.05, evolver=evolver)
        inside = evolver.grid.mask((0.0, 3.0))
        drift = np.abs(run.states[-1].values - w.values)[inside]
        assert np.max(drift) < 1e-2

    def test_empty_span(self, evolver):
        with pytest.raises(DomainError):
            evolve(bump(evolver, 0.3), 1.0, 1.0, evolver=evolver)

    def test_short_grid(self):
        with pytest.raises(DomainError):
            RadialEvolver(EvolverConfig(radius=1.0, step=0.1))


class TestSponge:
    @pytest.fixture(scope="class")
    def absorbing(self):
        return RadialEvolver(EvolverConfig(radius=40.0, step=0.1, dt=1e-2, sample_every=100))

    @pytest.fixture
    def wide_bump(self, absorbing):
        nodes = absorbing.grid.nodes
        return ComplexField(absorbing.grid, 0.3 * np.exp(-(nodes**2) / 8.0), "none")

    def test_backward_run_is_absorbed(self, absorbing, wide_bump):
        run = evolve(wide_bump, 0.0, -30.0, evolver=absorbing)
        assert run.times[0] == pytest.approx(-30.0)
        assert run.mass[0] < run.mass[-1]
        assert np.max(run.sup) <= run.sup[-1] * (1.0 + 1e-9)

    def test_backward_run_mirrors_forward_run(self, absorbing, wide_bump):
        forward = evolve(wide_bump, 0.0, 30.0, evolver=absorbing)
        backward = evolve(wide_bump, 0.0, -30.0, evolver=absorbing)
        gap = backward.states[0].values - np.conj(forward.states[-1].values)
        assert np.max(np.abs(gap)) < 1e-10
        assert backward.mass[0] == pytest.approx(forward.mass[-1], rel=1e-10)

    def test_small_data_disperse(self, absorbing):
        nodes = absorbing.grid.nodes
        small = ComplexField(absorbing.grid, 0.05 * np.exp(-0.5 * nodes**2), "none")
        run = evolve(small, 0.0, 10.0, evolver=absorbing)
        assert dispersive_decay(run) < 0.5
        assert run.sup[-1] < run.sup[run.sup.size // 2] < run.sup[0]


class TestCenterTracking:
    def test_rescaled_bubbles_follow_the_law(self, uniform_grid):
        nu = 0.1
        times = np.linspace(100.0, 200.0, 6)
        states = [rescaled_ground(uniform_grid, t**nu) for t in times]
        report = center_tracking(Trajectory.from_states(times, states), nu)
        assert report["worst"] < 1e-10
        assert report["slope"] == pytest.approx(0.5 * nu, rel=1e-8)

    def test_frozen_bubble_misses_a_fast_law(self, uniform_grid):
        times = np.geomspace(100.0, 1000.0, 5)
        states = [rescaled_ground(uniform_grid, 1.0) for _ in times]
        report = center_tracking(Trajectory.from_states(times, states), 0.2)
        assert report["worst"] > 0.1
        assert abs(report["slope"]) < 1e-10


class TestModulation:
    def test_recovers_exponents(self, uniform_grid):
        times = [1.0, 2.0, 4.0, 8.0]
        states = [rescaled_ground(uniform_grid, t**0.1, 0.05 * np.log(t)) for t in times]
        fit = modulation_fit(Trajectory.from_states(times, states))
        assert fit.nu == pytest.approx(0.1, abs=1e-5)
        assert fit.alpha0 == pytest.approx(0.05, abs=1e-5)
        assert fit.worst_misfit < 1e-4
        assert fit.window == (1.0, 8.0)

    def test_zero_field(self, uniform_grid):
        zero = ComplexField(uniform_grid, np.zeros(uniform_grid.size), "even")
        assert fit_bubble(zero, 1.0, EvolverConfig()).misfit == float("inf")

    def test_rejects_non_bubble(self, uniform_grid):
        nodes = uniform_grid.nodes
        wave = ComplexField(uniform_grid, np.sin(2.0 * nodes) * np.exp(-(nodes**2) / 20.0))
        with pytest.raises(NoBubbleError):
            modulation_fit(Trajectory.from_states([1.0, 2.0], [wave, wave]))

    def test_empty_window(self, uniform_grid):
        states = [rescaled_ground(uniform_grid, 1.0)] * 2
        with pytest.raises(DomainError):
            modulation_fit(Trajectory.from_states([1.0, 2.0], states), window=(10.0, 20.0))


class TestPicard:
    def test_time_map(self):
        clock = TimeMap(Params(nu=0.02, alpha0=0.01))
        assert clock.t(clock.tau(300.0)) == pytest.approx(300.0)
        assert clock.alpha1 == pytest.approx(0.01 / 1.04)
        assert clock.nu1 == pytest.approx(0.02 / 1.04)

    def test_ground_state_is_a_fixed_point(self, eigen):
        config = PicardConfig(tau_samples=8, iterations=3, substeps=1)
        solver = PicardSolver(Params(), config, eigen)
        report = solver.run(ground_background(solver.nodes), 10.0, 100.0)
        assert report.norms[-1] < 1e-10
        assert report.bound_holds
        assert np.max(np.abs(report.remainder)) < 1e-12

    def test_reversed_horizon(self, eigen):
        solver = PicardSolver(Params(), PicardConfig(tau_samples=8), eigen)
        with pytest.raises(DomainError):
            solver.run(ground_background(solver.nodes), 100.0, 10.0)

    def test_injected_background(self, eigen):
        config = PicardConfig(tau_samples=8, iterations=2, substeps=1)
        report = picard_remainder(
            None,
            tau1=10.0,
            tau_max=100.0,
            config=config,
            eigen=eigen,
            background=ground_background(eigen.operator.nodes),
            params=Params(),
        )
        assert report.horizon_change is not None
        assert report.summary()["final_norm"] < 1e-10

    def test_injected_background_needs_params(self, eigen):
        with pytest.raises(ConfigurationError):
            picard_remainder(None, 10.0, 100.0, eigen=eigen)
