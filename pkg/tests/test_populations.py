"""Тесты для динамики населенностей и стационарного состояния."""

import math

import numpy as np
import pytest

from deformed_lindblad.deformation import DeformationKind, DeformationSpec
from deformed_lindblad.environment import (
    EnvironmentCoefficients,
    Temperature,
    from_diffusion,
    thermal,
)
from deformed_lindblad.errors import InvalidStateError, NegativeBracketError, NonContractiveError
from deformed_lindblad.fock_ops import build_operators
from deformed_lindblad.generator import DeformedLiouvillian
from deformed_lindblad.populations import (
    PopulationVector,
    boltzmann_distribution,
    chain_rates,
    detailed_balance_report,
    energy_levels,
    integrate_populations,
    partition_function,
    partition_function_limit,
    population_rhs,
    rates,
    steady_state,
)
from tests.conftest import random_diagonal_state

IDENTITY = DeformationSpec()
Q_REAL = DeformationSpec(kind=DeformationKind.Q_REAL, tau=math.sqrt(0.2))

SPECS = [
    IDENTITY,
    DeformationSpec(kind=DeformationKind.Q_REAL, tau=0.3),
    DeformationSpec(kind=DeformationKind.Q_PHASE, tau=0.1),
    DeformationSpec(kind=DeformationKind.Q_TAYLOR, tau=0.3),
    DeformationSpec(kind=DeformationKind.TABLE, table=(1.0, 1.2, 0.9, 1.1)),
]


@pytest.fixture
def env():
    """Создать коэффициенты среды с D2 = 0.2, λ = 0.1 для тестов."""
    return from_diffusion(1.0, 0.1, 0.1, 0.1, 0.0)


@pytest.fixture
def zero_env():
    """Создать коэффициенты среды при T = 0 для тестов."""
    return thermal(1.0, 0.1, Temperature.zero())


class TestPopulationVector:
    """Тесты для PopulationVector."""

    def test_validation(self):
        """Тест проверки неотрицательности и нормировки."""
        with pytest.raises(InvalidStateError):
            PopulationVector([0.5, 0.6])
        with pytest.raises(InvalidStateError):
            PopulationVector([1.1, -0.1])
        with pytest.raises(InvalidStateError):
            PopulationVector([])
        assert PopulationVector([0.5, 0.6], validate=False).dim == 2

    def test_vacuum_and_density_matrix(self):
        """Тест вакуума и перехода к матрице плотности."""
        vacuum = PopulationVector.vacuum(3)
        assert np.array_equal(vacuum.p, [1.0, 0.0, 0.0])
        rho = PopulationVector([0.25, 0.75]).to_density_matrix()
        assert rho.elements[1, 1] == 0.75
        assert np.array_equal(PopulationVector.from_density_matrix(rho).p, [0.25, 0.75])


class TestRates:
    """Тесты для вероятностей переходов."""

    def test_ground_state_cannot_decay(self, env):
        """Тест t₋(0) = 0."""
        for spec in SPECS:
            assert rates(spec, env, 0)[1] == 0.0

    def test_undeformed_example(self, env):
        """Тест t₊(2) = 0.3, t₋(2) = 0.6 без деформации."""
        t_plus, t_minus = rates(IDENTITY, env, 2)
        assert t_plus == pytest.approx(0.3)
        assert t_minus == pytest.approx(0.6)

    def test_q_real_example(self, env):
        """Тест t₊(1) = 0.1 [2], t₋(1) = 0.3 [1] для q-деформации."""
        t_plus, t_minus = rates(Q_REAL, env, 1)
        assert t_plus == pytest.approx(0.1 * 2.0 * math.cosh(math.sqrt(0.2)), rel=1e-12)
        assert t_plus == pytest.approx(0.220336, abs=1e-6)
        assert t_minus == pytest.approx(0.3, rel=1e-12)

    def test_negative_level(self, env):
        """Тест отказа для n < 0."""
        with pytest.raises(ValueError):
            rates(IDENTITY, env, -1)

    def test_chain_rates_reflecting_boundary(self, env):
        """Тест векторов переходов: t₊(D-1) = 0, остальные совпадают с rates."""
        t_plus, t_minus = chain_rates(Q_REAL, env, 5)
        assert t_plus[-1] == 0.0
        for n in range(4):
            expected_plus, expected_minus = rates(Q_REAL, env, n)
            assert t_plus[n] == pytest.approx(expected_plus, rel=1e-12)
            assert t_minus[n] == pytest.approx(expected_minus, rel=1e-12)


class TestPopulationRhs:
    """Тесты для правой части цепочки населенностей."""

    def test_steady_state_is_fixed_point(self, env):
        """Тест: стационарное распределение - неподвижная точка."""
        for spec in SPECS:
            p = steady_state(spec, env, 12).populations
            assert np.max(np.abs(population_rhs(spec, env, p))) < 1e-12

    def test_vacuum_absorbing_at_zero_temperature(self, zero_env):
        """Тест: вакуум неподвижен при T = 0."""
        p = PopulationVector.vacuum(6)
        assert np.all(population_rhs(Q_REAL, zero_env, p) == 0.0)

    def test_probability_conservation(self, rng, env):
        """Тест Σ dP/dt = 0."""
        for spec in SPECS:
            p = rng.random(8)
            p /= p.sum()
            assert abs(population_rhs(spec, env, p).sum()) < 1e-13

    @pytest.mark.parametrize("spec", SPECS)
    def test_matches_generator_diagonal(self, rng, env, spec):
        """Тест: диагональ генератора при D1 = 0 совпадает с цепочкой."""
        dim = 8
        gen = DeformedLiouvillian(build_operators(spec, dim), env)
        rho = random_diagonal_state(rng, dim, support=dim - 1)
        diagonal = np.real(np.diag(gen.apply(rho)))
        assert np.max(np.abs(diagonal - population_rhs(spec, env, rho.populations()))) < 1e-12


class TestSteadyState:
    """Тесты для стационарного распределения."""

    def test_geometric_distribution(self, env):
        """Тест r = 1/3 и P(0) = 2/3 в бесконечном пределе."""
        steady = steady_state(IDENTITY, env, 30)
        assert steady.ratio == pytest.approx(1.0 / 3.0)
        assert steady.infinite_range_p0 == pytest.approx(2.0 / 3.0)
        p = steady.populations.p
        assert p.sum() == pytest.approx(1.0, abs=1e-14)
        for n in range(30):
            assert p[n] == pytest.approx((2.0 / 3.0) * (1.0 / 3.0) ** n, rel=1e-12)

    def test_deformation_independence(self, env):
        """Тест: стационарное распределение не зависит от деформации."""
        reference = steady_state(IDENTITY, env, 16).populations.p
        for spec in SPECS[1:]:
            assert np.array_equal(steady_state(spec, env, 16).populations.p, reference)

    def test_zero_temperature_is_vacuum(self, zero_env):
        """Тест T = 0: P = (1, 0, 0, ...)."""
        steady = steady_state(Q_REAL, zero_env, 5)
        assert steady.ratio == 0.0
        assert np.array_equal(steady.populations.p, [1.0, 0.0, 0.0, 0.0, 0.0])

    def test_thermal_ratio_is_boltzmann_factor(self):
        """Тест: при coth θ = 2 отношение r = e^{-2θ} = 1/3."""
        env = thermal(1.0, 0.1, Temperature.from_coth(2.0))
        steady = steady_state(IDENTITY, env, 20)
        theta = math.atanh(0.5)
        assert steady.ratio == pytest.approx(math.exp(-2.0 * theta), rel=1e-12)

    @pytest.mark.parametrize("coth", [1.25, 2.0, 5.0])
    def test_boltzmann_identity(self, coth):
        """Тест совпадения с распределением Больцмана e^{-E_n/kT}/Z."""
        omega = 1.7
        env = thermal(omega, 0.2, Temperature.from_coth(coth))
        theta = Temperature.from_coth(coth).theta
        dim = 40
        steady = steady_state(Q_REAL, env, dim).populations.p
        expected = boltzmann_distribution(omega, theta, dim)
        assert np.max(np.abs(steady - expected)) < 1e-12

    def test_non_contractive(self):
        """Тест отказа при D2 < λ."""
        bad = EnvironmentCoefficients(
            omega=1.0, lambda_=0.1, d_qq=0.02, d_pp=0.02, d_pq=0.0, d1=0j, d2=0.04
        )
        with pytest.raises(NonContractiveError):
            steady_state(IDENTITY, bad, 5)

    def test_invalid_q_phase_dimension(self, env):
        """Тест: деформация проверяется до уровня D-1."""
        spec = DeformationSpec(kind=DeformationKind.Q_PHASE, tau=math.sqrt(0.2))
        steady_state(spec, env, 8)
        with pytest.raises(NegativeBracketError):
            steady_state(spec, env, 9)


class TestDetailedBalance:
    """Тесты для условия детального равновесия."""

    def test_steady_state_residual(self, env):
        """Тест: в стационарном состоянии невязка мала."""
        for spec in SPECS:
            p = steady_state(spec, env, 16).populations
            assert detailed_balance_report(spec, env, p) < 1e-12

    def test_uniform_distribution_violates_balance(self):
        """Тест: равномерное распределение нарушает детальное равновесие."""
        env = thermal(1.0, 0.1, Temperature.from_coth(2.0))
        assert detailed_balance_report(IDENTITY, env, np.full(4, 0.25)) > 0.0

    def test_residual_does_not_depend_on_deformation(self, env):
        """Тест: невязка одинакова побитово для всех деформаций."""
        p = random_diagonal_state(np.random.default_rng(3), 6).populations()
        residuals = {detailed_balance_report(spec, env, p) for spec in SPECS}
        assert len(residuals) == 1
        assert residuals.pop() > 0.0

    def test_vacuum_at_zero_temperature(self, zero_env):
        """Тест: вакуум при T = 0 дает нулевую невязку."""
        assert detailed_balance_report(Q_REAL, zero_env, PopulationVector.vacuum(5)) == 0.0


class TestPartitionFunction:
    """Тесты для статсуммы и уровней энергии."""

    def test_energy_levels(self):
        """Тест E_n = ω(n + 1/2)."""
        assert np.allclose(energy_levels(2.0, 3), [1.0, 3.0, 5.0])

    def test_converges_to_closed_form(self):
        """Тест Z -> 1/(2 sinh θ) при coth θ = 2."""
        theta = math.log(3.0) / 2.0
        assert partition_function(1.0, theta, 200) == pytest.approx(0.866025, abs=1e-6)
        assert partition_function_limit(theta) == pytest.approx(math.sqrt(3.0) / 2.0, rel=1e-12)

    @pytest.mark.parametrize("coth", [1.25, 2.0, 4.0])
    def test_inverse_partition_function_from_ground_state(self, coth):
        """Тест Z^{-1} = P(0) e^{θ} для бесконечного спектра."""
        theta = Temperature.from_coth(coth).theta
        env = thermal(1.0, 0.1, Temperature.from_coth(coth))
        p0 = steady_state(IDENTITY, env, 10).infinite_range_p0
        expected = 1.0 / partition_function_limit(theta)
        assert p0 * math.exp(theta) == pytest.approx(expected, rel=1e-12)

    def test_single_term(self):
        """Тест n_max = 0: e^{-θ}."""
        assert partition_function(1.0, 0.7, 0) == pytest.approx(math.exp(-0.7))

    @pytest.mark.parametrize("theta", [0.2, 0.5, 2.0])
    def test_tail_bound(self, theta):
        """Тест: при n_max = 100 отличие от предела меньше 1e-12."""
        difference = abs(partition_function(1.0, theta, 100) - partition_function_limit(theta))
        assert difference < 1e-12

    def test_validation(self):
        """Тест отказа при θ <= 0 и n_max < 0."""
        with pytest.raises(ValueError):
            partition_function(1.0, 0.0, 10)
        with pytest.raises(ValueError):
            partition_function(1.0, 0.5, -1)

    def test_boltzmann_at_zero_temperature(self):
        """Тест: θ = inf дает вакуум."""
        assert np.array_equal(boltzmann_distribution(1.0, math.inf, 3), [1.0, 0.0, 0.0])


class TestIntegratePopulations:
    """Тесты для интегрирования цепочки."""

    @pytest.mark.parametrize("spec", SPECS)
    def test_converges_to_steady_state(self, env, spec):
        """Тест: при λt = 50 распределение совпадает со стационарным."""
        dim = 24
        p0 = np.zeros(dim)
        p0[3] = 1.0
        final = integrate_populations(spec, env, p0, t_final=50.0 / env.lambda_)
        assert final.shape == (1, dim)
        steady = steady_state(spec, env, dim).populations.p
        assert np.max(np.abs(final[0] - steady)) < 1e-8

    def test_output_grid(self, env):
        """Тест формы результата на заданной сетке."""
        p0 = PopulationVector.vacuum(6)
        result = integrate_populations(IDENTITY, env, p0, 2.0, times=[0.0, 1.0, 2.0])
        assert result.shape == (3, 6)
        assert np.allclose(result[0], p0.p, atol=1e-14)
        assert np.allclose(result.sum(axis=1), 1.0, atol=1e-10)

    def test_zero_time(self, env):
        """Тест t_final = 0."""
        p0 = PopulationVector.vacuum(4)
        result = integrate_populations(IDENTITY, env, p0, 0.0)
        assert np.array_equal(result, [p0.p])
        with pytest.raises(ValueError):
            integrate_populations(IDENTITY, env, p0, -1.0)
