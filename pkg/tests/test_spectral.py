"""Linearized operator, unstable pair, propagator, cutoffs, Jost data and coercivity."""

import numpy as np
import pytest

from src.spectral.coercivity import coercivity_check, constraint_rows
from src.spectral.jost import JostSolver, jost_solve, scattering_data, scattering_point
from src.spectral.operator import LinearizedOperator
from src.spectral.propagator import LinearPropagator, growth_constant, probe_spinor, propagator
from src.spectral.transform import (
    TransformKernel,
    build_kernel,
    bump_symbol,
    composition_defect,
    distorted_transform,
    eigenmode_annihilation,
    k_nodes,
    quasi_resonant,
    theta_k,
)
from src.utils.errors import DependencyError, DomainError, ResolutionError


class TestOperator:
    def test_assembled_symmetries_are_exact(self, line_operator):
        defects = line_operator.symmetry_defects()
        assert defects["sigma1"] < 1e-12
        assert defects["sigma3"] < 1e-12

    def test_zero_modes(self, line_operator):
        residuals = line_operator.zero_mode_residuals()
        assert residuals["W"] < 5e-3
        assert residuals["W1"] < 5e-3

    def test_short_grid(self):
        with pytest.raises(ResolutionError):
            LinearizedOperator.build(1.0, 0.2)

    def test_inner_product_is_linear_in_first_slot(self, line_operator):
        f = probe_spinor(line_operator)
        assert line_operator.inner(2j * f, f) == pytest.approx(2j * line_operator.norm(f) ** 2)


class TestEigenpair:
    def test_unstable_pair(self, eigen):
        assert eigen.lambda0 > 0.0
        assert eigen.residual < 1e-8
        assert np.allclose(eigen.zeta_minus, np.conj(eigen.zeta_plus))
        assert eigen.operator.norm(eigen.zeta_plus) == pytest.approx(1.0)

    def test_projections(self, eigen):
        plus, minus = eigen.coefficients(eigen.zeta_plus)
        assert plus == pytest.approx(1.0, abs=1e-10)
        assert abs(minus) < 1e-10
        assert eigen.operator.norm(eigen.project(eigen.zeta_plus)) < 1e-10

    def test_projector_is_idempotent(self, eigen):
        f = probe_spinor(eigen.operator)
        once = eigen.project(f)
        assert np.allclose(eigen.project(once), once, atol=1e-12)

    def test_spectrum_is_symmetric(self, eigen):
        assert eigen.spectral_symmetry() < 1e-6


class TestPropagator:
    def test_static_flow_conserves_energy(self, eigen):
        run = propagator(eigen, probe_spinor(eigen.operator), 100.0, 10.0, (0.0, 0.0), steps=40)
        assert run.g1_drift() < 1e-6
        assert run.leakage < 1e-8
        assert np.isnan(run.energy_rate_constant())
        assert len(run.to_rows()) == 41

    def test_reversed_interval(self, eigen):
        with pytest.raises(DomainError):
            propagator(eigen, probe_spinor(eigen.operator), 10.0, 100.0)

    def test_hamiltonian_needs_positive_time(self, eigen):
        with pytest.raises(DomainError):
            LinearPropagator(eigen, 0.01, 0.0).hamiltonian(0.0)


class TestCutoffs:
    def test_theta_k(self):
        values = theta_k(np.array([0.0, 0.02, 0.0375, 0.05, 0.1]), 0.1)
        assert np.allclose(values, [1.0, 1.0, 0.5, 0.0, 0.0])

    def test_k_nodes(self):
        ks, weights = k_nodes(0.1, 10)
        assert ks[0] == pytest.approx(0.0025)
        assert weights.sum() == pytest.approx(0.05)
        with pytest.raises(ResolutionError):
            k_nodes(0.1, 3)


class TestTransform:
    @pytest.fixture
    def kernel(self):
        rng = np.random.default_rng(7)
        ks, weights = k_nodes(0.2, 8)
        shape = (ks.size, 20, 2)
        values = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        return TransformKernel(
            kappa=0.2,
            ks=ks,
            weights=weights,
            nodes=0.5 * np.arange(1, 21),
            step=0.5,
            kernel=values,
            points=[],
        )

    def test_directions(self, kernel):
        symbol = np.ones((kernel.ks.size, 2), dtype=complex)
        line = distorted_transform("forward", kernel, symbol)
        assert line.shape == (2 * kernel.size,)
        assert np.allclose(line, kernel.forward(symbol))
        back = distorted_transform("inverse", kernel, line)
        assert back.shape == (kernel.ks.size, 2)
        assert np.allclose(back, kernel.adjoint(line))

    def test_invalid_input(self, kernel):
        with pytest.raises(DomainError):
            distorted_transform("sideways", kernel, np.zeros((kernel.ks.size, 2)))
        with pytest.raises(DomainError):
            distorted_transform("forward", kernel, np.zeros((3, 2)))

    def test_quasi_resonant_norm(self, kernel):
        symbol = np.zeros((kernel.ks.size, 2), dtype=complex)
        symbol[:, 0] = 1.0
        line = np.sqrt(2.0) * kernel.forward(symbol)
        result = quasi_resonant(kernel)
        expected = np.sqrt(4.0 * np.pi * kernel.step * np.sum(np.abs(line) ** 2))
        assert result.kappa == 0.2
        assert result.l2 == pytest.approx(expected)
        assert result.weighted >= 0.0
        assert result.to_row()["l2"] == result.l2


class TestJost:
    def test_free_solutions(self):
        solver = JostSolver(radius=50.0, potential_scale=0.0)
        k = 0.3
        rho = np.array([1.0, 5.0, 20.0])
        j1, j3 = solver.pair(k, rho)
        assert np.allclose(j1.values[:, 0], np.exp(1j * k * rho), atol=1e-8)
        assert np.allclose(j1.values[:, 1], 0.0, atol=1e-8)
        assert np.allclose(j3.values[:, 1], np.exp(-k * rho), atol=1e-8)
        assert np.allclose(j3.values[:, 0], 0.0, atol=1e-8)

    def test_invalid_requests(self):
        solver = JostSolver(radius=50.0, potential_scale=0.0)
        with pytest.raises(DomainError):
            solver.pair(-0.1)
        with pytest.raises(DomainError):
            solver.pair(0.1, [60.0])
        with pytest.raises(DomainError):
            jost_solve("J5", 0.1, [1.0], solver)
        with pytest.raises(DomainError):
            scattering_point(solver, 0.0)

    def test_free_wronskian(self):
        point, _, _ = scattering_point(JostSolver(radius=50.0, potential_scale=0.0), 0.3)
        assert abs(point.wronskians["J1J2"]) == pytest.approx(0.6, rel=1e-6)
        assert point.drift < 1e-6

    def test_table_is_ordered_by_momentum(self):
        solver = JostSolver(radius=50.0, potential_scale=0.0)
        table = scattering_data([0.4, 0.2, 0.3], solver)
        assert np.allclose(table.ks, [0.2, 0.3, 0.4])
        rows = table.to_rows()
        assert [row["k"] for row in rows] == pytest.approx([0.2, 0.3, 0.4])
        assert all(np.isfinite(row["s1_re"]) for row in rows)

    @pytest.mark.slow
    def test_wronskian_with_potential(self):
        k = 0.2
        point, _, _ = scattering_point(JostSolver(radius=200.0), k)
        assert abs(point.wronskians["J1J2"]) == pytest.approx(2.0 * k, rel=1e-4)
        assert point.drift < 1e-6


class TestCoercivity:
    def test_constraint_sets(self, line_operator, eigen):
        assert constraint_rows(line_operator, "none").shape == (0, 2 * line_operator.size)
        assert constraint_rows(line_operator, "eigenmodes", eigen).shape[0] == 4
        with pytest.raises(DomainError):
            constraint_rows(line_operator, "bogus")
        with pytest.raises(DependencyError):
            constraint_rows(line_operator, "dm")

    def test_free_quotient_is_one(self):
        op = LinearizedOperator.build(20.0, 0.5, potential_scale=0.0)
        result = coercivity_check(op, 0.1, constraints="none")
        assert result.minimum == pytest.approx(1.0, rel=1e-8)

    def test_unconstrained_form_is_indefinite(self, line_operator):
        assert coercivity_check(line_operator, 0.1, constraints="none").minimum < 0.0

    def test_energy_form_needs_kernel(self, line_operator, eigen):
        with pytest.raises(DependencyError):
            coercivity_check(line_operator, 0.1, "eigenmodes", "energy", eigen=eigen)


@pytest.fixture(scope="module")
def jost_solver():
    return JostSolver(radius=1000.0)


@pytest.fixture(scope="module")
def real_kernel(jost_solver):
    return build_kernel(0.1, 800.0, 0.1, 32, jost_solver)


@pytest.mark.slow
class TestRealScattering:
    @pytest.fixture(scope="class")
    def table(self):
        return scattering_data(np.geomspace(0.005, 0.2, 10), JostSolver(radius=200.0))

    def test_d_over_k_limit(self, table):
        slope = table.d_slope_at_zero()
        assert np.max(np.abs(slope - np.diag([-2j, 2.0]))) < 0.2

    def test_unitarity(self, table):
        for point in table.points:
            s1, r1 = point.s[0], point.r[0]
            assert abs(s1) ** 2 + abs(r1) ** 2 == pytest.approx(1.0, abs=1e-3)

    def test_low_energy_limits(self, table):
        limits = table.limits()
        assert abs(limits["s1"] + 1.0) < 0.05
        assert abs(limits["a1"] - 1.0) < 0.05
        assert abs(limits["a2"]) < 0.05


@pytest.mark.slow
class TestRealTransform:
    def test_composition(self, real_kernel):
        symbol = bump_symbol(real_kernel, np.random.default_rng(3))
        assert composition_defect(real_kernel, symbol) < 1e-2

    def test_eigenmodes_are_annihilated(self, real_kernel, eigen):
        defects = eigenmode_annihilation(real_kernel, eigen)
        assert set(defects) == {"plus", "minus"}
        assert max(defects.values()) < 1e-3

    def test_orthogonal_constraints_are_coercive(self, real_kernel, line_operator, eigen):
        resonant = quasi_resonant(real_kernel)
        result = coercivity_check(
            line_operator, 0.1, "orthogonal", "gradient", eigen, resonant, real_kernel
        )
        assert result.rank >= 4
        assert result.minimum > 0.0


@pytest.mark.slow
class TestPropagatorGrowth:
    @pytest.fixture(scope="class")
    def runs(self, eigen):
        f = probe_spinor(eigen.operator)
        return {
            strength: propagator(eigen, f, 100.0, 10.0, (strength, strength), steps=100)
            for strength in (0.0, 0.005, 0.01)
        }

    def test_free_flow_does_not_grow(self, runs):
        assert max(abs(v) for v in runs[0.0].growth().values()) < 1e-3

    def test_exponents_scale_with_coefficients(self, runs):
        constant = growth_constant(list(runs.values()))
        assert np.isfinite(constant)
        for strength in (0.005, 0.01):
            assert max(runs[strength].growth().values()) <= 2.0 * strength * constant + 1e-12
        weak = max(max(runs[0.005].growth().values()), 1e-3)
        assert max(runs[0.01].growth().values()) <= 2.5 * weak
