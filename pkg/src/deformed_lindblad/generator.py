"""Правая часть деформированного мастер-уравнения: операторная форма и числовое представление."""

import logging
import math
from typing import Sequence

import numpy as np
import scipy.linalg as la

from .environment import EnvironmentCoefficients
from .errors import DimensionMismatchError, DimensionTooLargeError, InvalidStateError
from .fock_ops import FockOperators

logger = logging.getLogger(__name__)

DEFAULT_MAX_VECTORIZED_DIM = 60


class DensityMatrix:
    """Эрмитова матрица плотности единичного следа в базисе Фока."""

    def __init__(
        self,
        elements: np.ndarray,
        *,
        validate: bool = True,
        hermitian_tol: float = 1e-12,
        trace_tol: float = 1e-10,
    ):
        """
        Инициализация DensityMatrix.

        Args:
            elements: Комплексная матрица D x D
            validate: Проверять эрмитовость и след
            hermitian_tol: Допуск эрмитовости
            trace_tol: Допуск отклонения следа от 1

        Raises:
            InvalidStateError: Если матрица не квадратная, не эрмитова или след != 1
        """
        matrix = np.array(elements, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise InvalidStateError(f"Density matrix must be square, got shape {matrix.shape}")
        self.elements = matrix
        self.elements.setflags(write=False)

        if validate:
            herm = self.hermiticity_error()
            if herm > hermitian_tol:
                raise InvalidStateError(f"Density matrix is not Hermitian (deviation {herm:.3e})")
            trace = self.trace()
            if abs(trace - 1.0) > trace_tol:
                raise InvalidStateError(f"Density matrix trace is {trace:.12g}, expected 1")

    @property
    def dim(self) -> int:
        return self.elements.shape[0]

    @classmethod
    def fock(cls, dim: int, n: int) -> "DensityMatrix":
        """Чистое состояние |n⟩⟨n|."""
        if not 0 <= n < dim:
            raise InvalidStateError(f"Fock level {n} outside truncation 0..{dim - 1}")
        matrix = np.zeros((dim, dim), dtype=complex)
        matrix[n, n] = 1.0
        return cls(matrix)

    @classmethod
    def thermal(cls, dim: int, theta: float) -> "DensityMatrix":
        """Состояние Гиббса, усеченное до dim уровней и перенормированное."""
        return gibbs_state(dim, theta)

    @classmethod
    def from_populations(cls, populations: Sequence[float]) -> "DensityMatrix":
        """Диагональное состояние с заданными населенностями."""
        p = np.asarray(populations, dtype=float)
        if np.any(p < -1e-12):
            raise InvalidStateError("Populations must be nonnegative")
        return cls(np.diag(p).astype(complex))

    @classmethod
    def from_pairs(cls, rows: Sequence[Sequence[Sequence[float]]]) -> "DensityMatrix":
        """Матрица из вложенного списка пар [re, im]."""
        data = np.asarray(rows, dtype=float)
        if data.ndim != 3 or data.shape[2] != 2:
            raise InvalidStateError("Matrix must be given as nested [re, im] pairs")
        return cls(data[..., 0] + 1j * data[..., 1])

    def trace(self) -> float:
        return float(np.real(np.trace(self.elements)))

    def purity(self) -> float:
        """Tr ρ²."""
        return float(np.real(np.vdot(self.elements.conj().T, self.elements)))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.elements - self.elements.conj().T)))

    def eigenvalues(self) -> np.ndarray:
        hermitian = 0.5 * (self.elements + self.elements.conj().T)
        return la.eigvalsh(hermitian)

    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues()[0])

    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.elements)).copy()

    def expectation(self, operator: np.ndarray) -> complex:
        """⟨B⟩ = Tr[ρ B]."""
        return complex(np.trace(self.elements @ operator))

    def expectation_diagonal(self, values: np.ndarray) -> float:
        """⟨g(N)⟩ для функции числа частиц, заданной значениями g(0..D-1)."""
        return float(np.dot(self.populations(), values))

    def hermitized(self) -> "DensityMatrix":
        """(ρ + ρ†)/2."""
        return DensityMatrix(0.5 * (self.elements + self.elements.conj().T), validate=False)

    def trace_distance(self, other: "DensityMatrix") -> float:
        """||ρ - σ||_1 для эрмитовых матриц."""
        if other.dim != self.dim:
            raise DimensionMismatchError(f"Dimensions differ: {self.dim} vs {other.dim}")
        diff = self.elements - other.elements
        diff = 0.5 * (diff + diff.conj().T)
        return float(np.sum(np.abs(la.eigvalsh(diff))))

    def top_population(self, levels: int = 2) -> float:
        """Суммарная населенность верхних уровней усечения."""
        return float(np.sum(self.populations()[-levels:]))


def gibbs_state(dim: int, theta: float) -> DensityMatrix:
    """
    Состояние Гиббса e^{-H/kT}/Z на усеченном пространстве.

    Args:
        dim: Размерность усечения
        theta: ħω/2kT; math.inf дает вакуум (T = 0)
    """
    if theta <= 0:
        raise ValueError(f"theta must be positive, got {theta}")
    if math.isinf(theta):
        weights = np.zeros(dim)
        weights[0] = 1.0
    else:
        # Общий множитель e^{-θ} сокращается при нормировке
        weights = np.exp(-2.0 * theta * np.arange(dim))
    weights /= weights.sum()
    return DensityMatrix(np.diag(weights).astype(complex))


def vec(matrix: np.ndarray) -> np.ndarray:
    """Векторизация по столбцам."""
    return np.asarray(matrix).reshape(-1, order="F")


def unvec(vector: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(vector).reshape((dim, dim), order="F")


class DeformedLiouvillian:
    """Линейное отображение ρ -> dρ/dt деформированного мастер-уравнения."""

    def __init__(
        self,
        ops: FockOperators,
        env: EnvironmentCoefficients,
        *,
        f_minus_one: float = 1.0,
    ):
        """
        Инициализация DeformedLiouvillian.

        Args:
            ops: Усеченные операторы (задают D и f)
            env: Коэффициенты среды
            f_minus_one: Значение f(-1); всегда умножается на нулевой матричный элемент
        """
        self.ops = ops
        self.env = env
        self.dim = ops.dim
        dim = self.dim

        # f(n) для n = -1 .. D+1; f(D+1) умножается только на нулевые элементы a†a†, aa
        self._f_full = np.concatenate(
            ([f_minus_one], ops.f_of_n, [ops.f_of_n_plus_one[-1]], [1.0])
        )
        n = np.arange(dim, dtype=float)
        self.f_minus = self._f_full[0:dim]  # f(N-1)
        self.f_zero = self._f_full[1 : dim + 1]  # f(N)
        self.f_plus = self._f_full[2 : dim + 2]  # f(N+1)
        self.f_plus2 = self._f_full[3 : dim + 3]  # f(N+2)
        self.number = n

        a = ops.a
        a_dag = ops.a_dag
        a2 = a @ a
        a_dag2 = a_dag @ a_dag

        # Группа D1
        self._raise2_left = (self.f_minus * self.f_zero)[:, None] * a_dag2  # f(N-1)f(N)a†a†
        self._raise2_right = a_dag2 * (self.f_plus * self.f_plus2)[None, :]  # a†a†f(N+1)f(N+2)
        self._raise_left = self.f_zero[:, None] * a_dag  # f(N)a†
        self._raise_right = a_dag * self.f_plus[None, :]  # a†f(N+1)
        # Группа D1*
        self._lower2_left = (self.f_plus * self.f_plus2)[:, None] * a2  # f(N+1)f(N+2)aa
        self._lower2_right = a2 * (self.f_minus * self.f_zero)[None, :]  # aa f(N-1)f(N)
        self._lower_left = self.f_plus[:, None] * a  # f(N+1)a
        self._lower_right = a * self.f_zero[None, :]  # a f(N)
        # Диагонали N f²(N) и (N+1) f²(N+1)
        self._loss_diag = n * self.f_zero**2
        self._gain_diag = (n + 1.0) * self.f_plus**2

        logger.info(
            f"DeformedLiouvillian initialized: dim={dim}, deformation={ops.spec.kind.value}, "
            f"D1={env.d1}, D2={env.d2}, lambda={env.lambda_}"
        )

    def f(self, n: int) -> float:
        """f(n) для -1 <= n <= D+1."""
        return float(self._f_full[n + 1])

    def _check_dim(self, rho: DensityMatrix) -> None:
        if rho.dim != self.dim:
            raise DimensionMismatchError(
                f"Density matrix dimension {rho.dim} != Liouvillian dimension {self.dim}"
            )

    def rhs(self, rho: np.ndarray) -> np.ndarray:
        """Правая часть для произвольной матрицы (линейное отображение)."""
        env = self.env
        d1 = env.d1
        n = self.number

        out = -1j * env.omega * (n[:, None] - n[None, :]) * rho
        if d1 != 0:
            out += 0.5 * d1 * (
                self._raise2_left @ rho
                + rho @ self._raise2_right
                - 2.0 * self._raise_left @ rho @ self._raise_right
            )
            out += 0.5 * np.conj(d1) * (
                self._lower2_left @ rho
                + rho @ self._lower2_right
                - 2.0 * self._lower_left @ rho @ self._lower_right
            )
        out -= 0.5 * env.loss * (
            self._loss_diag[:, None] * rho
            + rho * self._loss_diag[None, :]
            - 2.0 * self._lower_left @ rho @ self._raise_right
        )
        gain = env.gain
        if gain != 0.0:
            out -= 0.5 * gain * (
                self._gain_diag[:, None] * rho
                + rho * self._gain_diag[None, :]
                - 2.0 * self._raise_left @ rho @ self._lower_right
            )
        return out

    def apply(self, rho: DensityMatrix) -> np.ndarray:
        """
        dρ/dt в операторной форме.

        Raises:
            DimensionMismatchError: Если размерности не совпадают
        """
        self._check_dim(rho)
        return self.rhs(np.asarray(rho.elements))

    def apply_number_rep(self, rho: DensityMatrix) -> np.ndarray:
        """
        dρ/dt поэлементно, рекурсией по индексам в числовом представлении.

        Элементы с индексами вне [0, D-1] дают нулевой вклад.
        """
        self._check_dim(rho)
        r = rho.elements
        dim = self.dim
        env = self.env
        d1 = env.d1
        d1c = np.conj(d1)
        loss = env.loss
        gain = env.gain
        f = self.f

        def elem(i: int, j: int) -> complex:
            if 0 <= i < dim and 0 <= j < dim:
                return r[i, j]
            return 0.0

        out = np.zeros((dim, dim), dtype=complex)
        for m in range(dim):
            for n in range(dim):
                val = -1j * env.omega * (m - n) * r[m, n]
                val -= 0.5 * (
                    loss * (m * f(m) ** 2 + n * f(n) ** 2)
                    + gain * ((m + 1) * f(m + 1) ** 2 + (n + 1) * f(n + 1) ** 2)
                ) * r[m, n]
                if m + 1 < dim and n + 1 < dim:
                    up = math.sqrt((m + 1) * (n + 1)) * f(m + 1) * f(n + 1)
                    val += loss * up * r[m + 1, n + 1]
                if m >= 1 and n >= 1:
                    val += gain * math.sqrt(m * n) * f(m) * f(n) * r[m - 1, n - 1]
                if d1 != 0:
                    val -= d1 * math.sqrt(m * (n + 1)) * f(m) * f(n + 1) * elem(m - 1, n + 1)
                    # √((m+1)n): совпадает с операторной формой f(N+1) a ρ a f(N)
                    val -= d1c * math.sqrt((m + 1) * n) * f(m + 1) * f(n) * elem(m + 1, n - 1)
                    two_up = math.sqrt((n + 1) * (n + 2)) * f(n + 1) * f(n + 2)
                    val += 0.5 * d1 * two_up * elem(m, n + 2)
                    val += 0.5 * d1 * math.sqrt(m * (m - 1)) * f(m - 1) * f(m) * elem(m - 2, n)
                    two_up = math.sqrt((m + 1) * (m + 2)) * f(m + 1) * f(m + 2)
                    val += 0.5 * d1c * two_up * elem(m + 2, n)
                    val += 0.5 * d1c * math.sqrt(n * (n - 1)) * f(n - 1) * f(n) * elem(m, n - 2)
                out[m, n] = val
        return out

    def vectorized_matrix(self, max_dim: int = DEFAULT_MAX_VECTORIZED_DIM) -> np.ndarray:
        """
        Матрица L размера D² x D², vec(dρ/dt) = L vec(ρ) при векторизации по столбцам.

        Raises:
            DimensionTooLargeError: Если D > max_dim
        """
        dim = self.dim
        if dim > max_dim:
            raise DimensionTooLargeError(
                f"Vectorized Liouvillian for dim={dim} exceeds cap {max_dim} "
                f"({dim * dim} x {dim * dim} dense matrix)"
            )
        eye = np.eye(dim)
        env = self.env

        def left(op: np.ndarray) -> np.ndarray:
            return np.kron(eye, op)

        def right(op: np.ndarray) -> np.ndarray:
            return np.kron(op.T, eye)

        def sandwich(op_left: np.ndarray, op_right: np.ndarray) -> np.ndarray:
            return np.kron(op_right.T, op_left)

        number = np.diag(self.number)
        loss_diag = np.diag(self._loss_diag)
        gain_diag = np.diag(self._gain_diag)

        liouvillian = -1j * env.omega * (left(number) - right(number))
        liouvillian = liouvillian.astype(complex)
        if env.d1 != 0:
            liouvillian += 0.5 * env.d1 * (
                left(self._raise2_left)
                + right(self._raise2_right)
                - 2.0 * sandwich(self._raise_left, self._raise_right)
            )
            liouvillian += 0.5 * np.conj(env.d1) * (
                left(self._lower2_left)
                + right(self._lower2_right)
                - 2.0 * sandwich(self._lower_left, self._lower_right)
            )
        liouvillian -= 0.5 * env.loss * (
            left(loss_diag) + right(loss_diag) - 2.0 * sandwich(self._lower_left, self._raise_right)
        )
        liouvillian -= 0.5 * env.gain * (
            left(gain_diag) + right(gain_diag) - 2.0 * sandwich(self._raise_left, self._lower_right)
        )
        logger.debug(f"Vectorized Liouvillian built: shape={liouvillian.shape}")
        return liouvillian

    def trace_leakage(self, rho: DensityMatrix) -> float:
        """|Tr dρ/dt|; ноль в бесконечном пространстве, конечен из-за усечения."""
        return float(abs(np.trace(self.apply(rho))))


def undeformed_reference_rhs(
    rho: np.ndarray, env: EnvironmentCoefficients, padding: int = 2
) -> np.ndarray:
    """
    Недеформированный генератор Линдблада, собранный из лестничной структуры a, a†.

    Считается в пространстве размерности D + padding с дополненной нулями ρ,
    затем возвращается верхний левый D x D блок. Применим к эрмитовым ρ.
    """
    dim = rho.shape[0]
    big = dim + padding
    a = np.diag(np.sqrt(np.arange(1, big, dtype=float)), 1).astype(complex)
    a_dag = a.conj().T
    hamiltonian = 0.5 * env.omega * (a @ a_dag + a_dag @ a)

    padded = np.zeros((big, big), dtype=complex)
    padded[:dim, :dim] = rho

    bracket = (
        env.d1 * (a_dag @ a_dag @ padded + padded @ a_dag @ a_dag - 2.0 * a_dag @ padded @ a_dag)
        + (env.d2 + env.lambda_) * (a @ padded @ a_dag - a_dag @ a @ padded)
        + (env.d2 - env.lambda_) * (a_dag @ padded @ a - padded @ a @ a_dag)
    )
    full = -1j * (hamiltonian @ padded - padded @ hamiltonian) + 0.5 * (bracket + bracket.conj().T)
    return full[:dim, :dim]


def thermal_reference_rhs(
    ops: FockOperators, omega: float, lambda_: float, coth: float, rho: np.ndarray
) -> np.ndarray:
    """
    Тепловая форма (D1 = 0, D2 = λ coth) через деформированные A, A†.

    f(N+1) a ρ a† f(N+1) = A ρ A†, f(N) a† ρ a f(N) = A† ρ A, N f²(N) = A†A.
    При coth = 1 остается только член с λ(coth + 1) = 2λ.
    """
    n = ops.number_diagonal
    relax_diag = ops.A_dag @ ops.A
    excite_diag = np.diag((n + 1.0) * ops.f_of_n_plus_one**2)
    number = np.diag(n)

    out = -1j * omega * (number @ rho - rho @ number)
    out -= 0.5 * lambda_ * (coth + 1.0) * (
        relax_diag @ rho + rho @ relax_diag - 2.0 * ops.A @ rho @ ops.A_dag
    )
    if coth != 1.0:
        out -= 0.5 * lambda_ * (coth - 1.0) * (
            excite_diag @ rho + rho @ excite_diag - 2.0 * ops.A_dag @ rho @ ops.A
        )
    return out
