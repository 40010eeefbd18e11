"""Тесты для генератора деформированного мастер-уравнения."""

import math

import numpy as np
import pytest
import scipy.linalg as la

from deformed_lindblad.deformation import DeformationKind, DeformationSpec
from deformed_lindblad.environment import Temperature, from_diffusion, thermal
from deformed_lindblad.errors import (
    DimensionMismatchError,
    DimensionTooLargeError,
    InvalidStateError,
)
from deformed_lindblad.fock_ops import build_operators
from deformed_lindblad.generator import (
    DeformedLiouvillian,
    DensityMatrix,
    gibbs_state,
    thermal_reference_rhs,
    undeformed_reference_rhs,
    unvec,
    vec,
)
from tests.conftest import random_density_matrix

IDENTITY = DeformationSpec()
Q_REAL = DeformationSpec(kind=DeformationKind.Q_REAL, tau=0.3)

SPECS = [
    IDENTITY,
    Q_REAL,
    DeformationSpec(kind=DeformationKind.Q_PHASE, tau=math.sqrt(0.02)),
    DeformationSpec(kind=DeformationKind.Q_TAYLOR, tau=0.3),
    DeformationSpec(kind=DeformationKind.TABLE, table=(1.0, 1.15, 0.85, 1.05, 0.95)),
]


def generic_env():
    """Коэффициенты с D1 != 0."""
    return from_diffusion(1.0, 0.1, 0.2, 0.15, 0.03)


def thermal_env(coth: float = 2.0, lambda_: float = 0.1):
    return thermal(1.0, lambda_, Temperature.from_coth(coth))


def liouvillian(spec, dim, env, **kwargs):
    return DeformedLiouvillian(build_operators(spec, dim), env, **kwargs)


class TestDensityMatrix:
    """Тесты для DensityMatrix."""

    def test_fock_state(self):
        """Тест чистого состояния |n⟩⟨n|."""
        rho = DensityMatrix.fock(4, 2)
        assert rho.trace() == 1.0
        assert rho.purity() == pytest.approx(1.0)
        assert np.array_equal(rho.populations(), [0.0, 0.0, 1.0, 0.0])
        with pytest.raises(InvalidStateError):
            DensityMatrix.fock(4, 4)

    def test_validation(self):
        """Тест отказа для неэрмитовой матрицы и неединичного следа."""
        with pytest.raises(InvalidStateError):
            DensityMatrix(np.array([[0.5, 0.1], [0.2, 0.5]]))
        with pytest.raises(InvalidStateError):
            DensityMatrix(np.diag([0.5, 0.6]))
        with pytest.raises(InvalidStateError):
            DensityMatrix(np.ones((2, 3)))
        unchecked = DensityMatrix(np.diag([0.5, 0.6]), validate=False)
        assert unchecked.trace() == pytest.approx(1.1)

    def test_from_pairs(self):
        """Тест разбора вложенных пар [re, im]."""
        rho = DensityMatrix.from_pairs(
            [[[0.5, 0.0], [0.0, -0.25]], [[0.0, 0.25], [0.5, 0.0]]]
        )
        assert rho.elements[0, 1] == -0.25j
        assert rho.hermiticity_error() == 0.0
        with pytest.raises(InvalidStateError):
            DensityMatrix.from_pairs([[0.5, 0.0], [0.0, 0.5]])

    def test_elements_are_read_only(self):
        """Тест неизменяемости элементов."""
        rho = DensityMatrix.fock(3, 0)
        with pytest.raises(ValueError):
            rho.elements[0, 0] = 2.0

    def test_trace_distance(self):
        """Тест следовой нормы разности."""
        distance = DensityMatrix.fock(3, 0).trace_distance(DensityMatrix.fock(3, 1))
        assert distance == pytest.approx(2.0)
        with pytest.raises(DimensionMismatchError):
            DensityMatrix.fock(3, 0).trace_distance(DensityMatrix.fock(4, 0))

    def test_expectations(self, rng):
        """Тест средних: ⟨N⟩ через оператор и через диагональ."""
        rho = random_density_matrix(rng, 5)
        ops = build_operators(IDENTITY, 5)
        n = np.arange(5, dtype=float)
        mean_n = rho.expectation_diagonal(n)
        assert rho.expectation(ops.n_op).real == pytest.approx(mean_n, abs=1e-12)
        assert rho.min_eigenvalue() > -1e-12
        assert rho.top_population(1) == pytest.approx(rho.populations()[-1])


def test_gibbs_state():
    """Тест усеченного состояния Гиббса."""
    theta = math.atanh(0.5)
    rho = gibbs_state(6, theta)
    p = rho.populations()
    assert rho.trace() == pytest.approx(1.0)
    assert p[1] / p[0] == pytest.approx(math.exp(-2.0 * theta))
    assert p[1] / p[0] == pytest.approx(1.0 / 3.0)
    vacuum = gibbs_state(4, math.inf)
    assert np.array_equal(vacuum.populations(), [1.0, 0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        gibbs_state(4, 0.0)


def test_vec_unvec_column_stacking():
    """Тест векторизации по столбцам."""
    matrix = np.array([[1, 2], [3, 4]])
    assert np.array_equal(vec(matrix), [1, 3, 2, 4])
    assert np.array_equal(unvec(vec(matrix), 2), matrix)


@pytest.mark.parametrize("spec", [IDENTITY, Q_REAL])
def test_single_excitation_decay_at_zero_temperature(spec):
    """Тест |1⟩ при T = 0: dρ/dt = 2λ(|0⟩⟨0| - |1⟩⟨1|)."""
    lam = 0.3
    gen = liouvillian(spec, 3, thermal_env(1.0, lam))
    drho = gen.apply(DensityMatrix.fock(3, 1))
    expected = np.diag([2.0 * lam, -2.0 * lam, 0.0])
    assert np.allclose(drho, expected, atol=1e-14)


def test_ground_state_element_from_number_representation():
    """Тест dρ_00/dt = 2λρ_11 при f = 1, T = 0."""
    lam = 0.25
    gen = liouvillian(IDENTITY, 4, thermal_env(1.0, lam))
    rho = DensityMatrix.from_populations([0.1, 0.6, 0.3, 0.0])
    drho = gen.apply_number_rep(rho)
    assert drho[0, 0].real == pytest.approx(2.0 * lam * 0.6)


@pytest.mark.parametrize("spec", [IDENTITY, Q_REAL])
def test_gibbs_state_is_stationary(spec):
    """Тест стационарности состояния Гиббса для тепловых коэффициентов."""
    coth = 2.0
    gen = liouvillian(spec, 30, thermal_env(coth))
    rho = gibbs_state(30, math.atanh(1.0 / coth))
    assert np.max(np.abs(gen.apply(rho))) < 1e-10


@pytest.mark.parametrize("spec", SPECS)
def test_vacuum_is_stationary_at_zero_temperature(spec):
    """Тест: вакуум стационарен при T = 0 для любой деформации."""
    gen = liouvillian(spec, 5, thermal_env(1.0))
    drho = gen.apply(DensityMatrix.fock(5, 0))
    assert np.max(np.abs(drho)) == 0.0


@pytest.mark.parametrize("dim", [4, 8, 12])
@pytest.mark.parametrize("spec", SPECS)
@pytest.mark.parametrize("env_kind", ["generic", "thermal", "zero"])
def test_operator_form_matches_number_representation(rng, dim, spec, env_kind):
    """Тест совпадения операторной формы и поэлементной рекурсии."""
    env = {
        "generic": generic_env(),
        "thermal": thermal_env(1.5),
        "zero": thermal_env(1.0),
    }[env_kind]
    gen = liouvillian(spec, dim, env)
    for _ in range(3):
        rho = random_density_matrix(rng, dim)
        assert np.max(np.abs(gen.apply(rho) - gen.apply_number_rep(rho))) < 1e-12


def test_strong_q_phase_matches_number_representation(rng):
    """Тест q-фазы с τ² = 0.2 на допустимой размерности D = 4."""
    spec = DeformationSpec(kind=DeformationKind.Q_PHASE, tau=math.sqrt(0.2))
    gen = liouvillian(spec, 4, generic_env())
    rho = random_density_matrix(rng, 4)
    assert np.max(np.abs(gen.apply(rho) - gen.apply_number_rep(rho))) < 1e-12


def test_f_minus_one_is_inert(rng):
    """Тест: значение f(-1) не влияет на результат."""
    ops = build_operators(Q_REAL, 6)
    base = DeformedLiouvillian(ops, generic_env())
    perturbed = DeformedLiouvillian(ops, generic_env(), f_minus_one=7.5)
    assert perturbed.f(-1) == 7.5
    rho = random_density_matrix(rng, 6)
    assert np.array_equal(base.apply(rho), perturbed.apply(rho))
    assert np.array_equal(base.apply_number_rep(rho), perturbed.apply_number_rep(rho))


@pytest.mark.parametrize("spec", SPECS)
def test_hermiticity_is_preserved(rng, spec):
    """Тест эрмитовости dρ/dt для эрмитовой ρ."""
    gen = liouvillian(spec, 8, generic_env())
    drho = gen.apply(random_density_matrix(rng, 8))
    assert np.max(np.abs(drho - drho.conj().T)) < 1e-12


@pytest.mark.parametrize("env_kind", ["generic", "thermal"])
def test_undeformed_reduction(rng, env_kind):
    """Тест: без деформации генератор совпадает со стандартной формой Линдблада."""
    env = generic_env() if env_kind == "generic" else thermal_env(1.7)
    gen = liouvillian(IDENTITY, 6, env)
    for _ in range(3):
        rho = random_density_matrix(rng, 6)
        reference = undeformed_reference_rhs(np.asarray(rho.elements), env)
        assert np.max(np.abs(gen.apply(rho) - reference)) < 1e-12


@pytest.mark.parametrize("coth", [1.0, 2.0])
def test_thermal_form_through_deformed_ladder_operators(rng, coth):
    """Тест тепловой формы через A, A† против общей операторной формы."""
    ops = build_operators(Q_REAL, 8)
    env = thermal_env(coth)
    gen = DeformedLiouvillian(ops, env)
    rho = random_density_matrix(rng, 8)
    reference = thermal_reference_rhs(ops, env.omega, env.lambda_, coth, np.asarray(rho.elements))
    assert np.max(np.abs(gen.apply(rho) - reference)) < 1e-12


def test_zero_temperature_thermal_form_has_no_excitation():
    """Тест: при coth = 1 член возбуждения отсутствует."""
    ops = build_operators(Q_REAL, 4)
    rho = np.asarray(DensityMatrix.fock(4, 0).elements)
    assert np.max(np.abs(thermal_reference_rhs(ops, 1.0, 0.1, 1.0, rho))) == 0.0


@pytest.mark.parametrize("spec", [IDENTITY, Q_REAL])
def test_trace_leakage_formula(rng, spec):
    """Тест Tr dρ/dt = -(D2 - λ) D f²(D) P(D-1)."""
    dim = 6
    env = generic_env()
    gen = liouvillian(spec, dim, env)
    rho = random_density_matrix(rng, dim)
    expected = -env.gain * dim * gen.f(dim) ** 2 * rho.populations()[-1]
    assert np.trace(gen.apply(rho)).real == pytest.approx(expected, abs=1e-12)
    assert gen.trace_leakage(rho) == pytest.approx(abs(expected), abs=1e-12)


@pytest.mark.parametrize("spec", SPECS)
def test_trace_preserved_when_top_levels_empty(rng, spec):
    """Тест сохранения следа при пустых верхних уровнях."""
    gen = liouvillian(spec, 8, generic_env())
    rho = random_density_matrix(rng, 8, support=6)
    assert gen.trace_leakage(rho) <= 1e-10


def test_dimension_mismatch():
    """Тест отказа при несовпадении размерностей."""
    gen = liouvillian(IDENTITY, 4, generic_env())
    with pytest.raises(DimensionMismatchError):
        gen.apply(DensityMatrix.fock(5, 0))
    with pytest.raises(DimensionMismatchError):
        gen.apply_number_rep(DensityMatrix.fock(3, 0))


class TestVectorizedMatrix:
    """Тесты для матричного представления D² x D²."""

    @pytest.mark.parametrize("spec", [IDENTITY, Q_REAL])
    def test_matches_apply(self, rng, spec):
        """Тест L vec(ρ) = vec(dρ/dt)."""
        gen = liouvillian(spec, 4, generic_env())
        matrix = gen.vectorized_matrix()
        assert matrix.shape == (16, 16)
        for _ in range(5):
            rho = random_density_matrix(rng, 4)
            deviation = np.max(np.abs(matrix @ vec(rho.elements) - vec(gen.apply(rho))))
            assert deviation < 1e-12

    def test_stationary_eigenvector_is_gibbs_state(self):
        """Тест: собственный вектор с нулевым собственным значением - состояние Гиббса."""
        coth = 1.25
        dim = 12
        gen = liouvillian(IDENTITY, dim, thermal_env(coth))
        eigenvalues, eigenvectors = la.eig(gen.vectorized_matrix())
        index = int(np.argmin(np.abs(eigenvalues)))
        assert abs(eigenvalues[index]) < 1e-9
        rho = unvec(eigenvectors[:, index], dim)
        rho = 0.5 * (rho + rho.conj().T)
        rho = rho / np.trace(rho)
        gibbs = gibbs_state(dim, math.atanh(1.0 / coth))
        assert np.max(np.abs(rho - gibbs.elements)) < 1e-8

    def test_trace_is_left_null_vector(self, rng):
        """Тест: след - левый нулевой вектор L на состояниях с пустыми верхними уровнями."""
        dim = 6
        gen = liouvillian(Q_REAL, dim, generic_env())
        row = vec(np.eye(dim)) @ gen.vectorized_matrix()
        for _ in range(5):
            rho = random_density_matrix(rng, dim, support=dim - 2)
            assert abs(row @ vec(rho.elements)) < 1e-12

    def test_dimension_cap(self):
        """Тест ограничения размерности."""
        gen = liouvillian(IDENTITY, 5, generic_env())
        with pytest.raises(DimensionTooLargeError):
            gen.vectorized_matrix(max_dim=4)
