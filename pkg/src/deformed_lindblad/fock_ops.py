"""Усеченные матрицы a, a†, N, f(N) и деформированные операторы A, A†."""

import logging
from typing import NamedTuple, Tuple

import numpy as np

from .deformation import DeformationSpec, f_values, validate_up_to

logger = logging.getLogger(__name__)


def _frozen(matrix: np.ndarray) -> np.ndarray:
    matrix.setflags(write=False)
    return matrix


class FockOperators:
    """Операторы в базисе |0⟩ ... |D-1⟩ (верхний левый D x D блок бесконечных матриц)."""

    def __init__(self, spec: DeformationSpec, dim: int, f_ext: np.ndarray):
        """
        Инициализация FockOperators.

        Используйте build_operators(); конструктор принимает уже проверенные значения.

        Args:
            spec: Описание деформации
            dim: Размерность усечения D
            f_ext: Значения f(0), ..., f(D)
        """
        self.spec = spec
        self.dim = dim

        sqrt_n = np.sqrt(np.arange(1, dim, dtype=float))
        self.a = _frozen(np.diag(sqrt_n, 1).astype(complex))
        self.a_dag = _frozen(self.a.conj().T.copy())
        self.n_op = _frozen(self.a_dag @ self.a)

        self.f_of_n = _frozen(np.array(f_ext[:dim], dtype=float))
        # f(N+1) на диагонали; элемент D-1 требует f(D)
        self.f_of_n_plus_one = _frozen(np.array(f_ext[1 : dim + 1], dtype=float))

        a_f = self.a * self.f_of_n[None, :]
        f_a = self.f_of_n_plus_one[:, None] * self.a
        deviation = float(np.max(np.abs(a_f - f_a)))
        if deviation > 1e-14:
            raise ValueError(
                f"Factorizations a f(N) and f(N+1) a differ by {deviation:.3e}"
            )
        self.A = _frozen(a_f)
        self.A_dag = _frozen(self.A.conj().T.copy())

        logger.debug(f"FockOperators initialized: dim={dim}, deformation={spec.kind.value}")

    @property
    def number_diagonal(self) -> np.ndarray:
        """Собственные значения N: 0, 1, ..., D-1."""
        return np.arange(self.dim, dtype=float)


def build_operators(spec: DeformationSpec, dim: int) -> FockOperators:
    """
    Построить усеченные операторы размерности dim.

    Args:
        spec: Описание деформации
        dim: Размерность пространства Фока (>= 2)

    Returns:
        FockOperators

    Raises:
        NegativeBracketError: Если деформация не определена до n = dim
    """
    if dim < 2:
        raise ValueError(f"Fock dimension must be >= 2, got {dim}")
    validate_up_to(spec, dim)
    return FockOperators(spec, dim, f_values(spec, dim))


class CommutatorReport(NamedTuple):
    """Максимальные отклонения от алгебраических соотношений."""

    deformed_commutator: float  # [A, A†] против diag((n+1)f²(n+1) - n f²(n)), внутренний блок
    a_number: float  # [A, N] - A, вся матрица
    a_dag_number: float  # [A†, N] + A†, вся матрица
    factorization: float  # a f(N) против f(N+1) a
    hermitian_conjugation: float  # (A†)† против A

    @property
    def max_deviation(self) -> float:
        return max(self)


def _commutator(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return x @ y - y @ x


def check_commutators(ops: FockOperators) -> CommutatorReport:
    """
    Проверить соотношения деформированной алгебры на усеченных матрицах.

    Последний базисный уровень исключается из проверки [A, A†]: усечение
    нарушает алгебру на верхнем уровне.
    """
    n = ops.number_diagonal
    box_next = (n + 1) * ops.f_of_n_plus_one**2
    box_here = n * ops.f_of_n**2
    expected = np.diag(box_next - box_here)

    interior = slice(0, ops.dim - 1)
    comm = _commutator(ops.A, ops.A_dag)
    deformed = float(np.max(np.abs(comm[interior, interior] - expected[interior, interior])))

    a_number = float(np.max(np.abs(_commutator(ops.A, ops.n_op) - ops.A)))
    a_dag_number = float(np.max(np.abs(_commutator(ops.A_dag, ops.n_op) + ops.A_dag)))
    factorization = float(
        np.max(np.abs(ops.a * ops.f_of_n[None, :] - ops.f_of_n_plus_one[:, None] * ops.a))
    )
    conjugation = float(np.max(np.abs(ops.A_dag.conj().T - ops.A)))

    return CommutatorReport(deformed, a_number, a_dag_number, factorization, conjugation)


def quadratures(ops: FockOperators, omega: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Координата и импульс через a, a† (ħ = m = 1).

    Returns:
        (q, p), q = (a† + a)/sqrt(2ω), p = i sqrt(ω/2)(a† - a)
    """
    if omega <= 0:
        raise ValueError(f"omega must be positive, got {omega}")
    q = (ops.a_dag + ops.a) / np.sqrt(2.0 * omega)
    p = 1j * np.sqrt(omega / 2.0) * (ops.a_dag - ops.a)
    return q, p
