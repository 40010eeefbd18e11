"""Функции деформации f(n) и q-скобка [n]."""

import cmath
import logging
import math
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import InvalidTableError, NegativeBracketError

logger = logging.getLogger(__name__)

# Ниже этого τ отношение sinh(nτ)/sinh(τ) считается по разложению Тейлора
TAYLOR_SWITCH_TAU = 1e-6


class DeformationKind(str, Enum):
    """Типы деформации (значения совпадают с JSON-конфигурацией)."""

    IDENTITY = "none"
    Q_REAL = "q-real"
    Q_PHASE = "q-phase"
    Q_TAYLOR = "q-taylor"
    TABLE = "table"


class DeformationSpec(BaseModel):
    """Описание функции деформации: тип, параметр τ и (для TABLE) таблица f(n)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: DeformationKind = Field(
        default=DeformationKind.IDENTITY, description="Тип деформации"
    )
    tau: float = Field(
        default=0.0, ge=0.0, description="Параметр деформации τ (q = e^τ или q = e^{iτ})"
    )
    table: Optional[Tuple[float, ...]] = Field(
        default=None, description="Значения f(0), f(1), ..., f(L); f(n) = 1 при n > L"
    )

    @model_validator(mode="after")
    def _check_table_presence(self) -> "DeformationSpec":
        if self.kind is DeformationKind.TABLE and not self.table:
            raise ValueError("kind='table' requires a non-empty 'table'")
        if self.kind is not DeformationKind.TABLE and self.table is not None:
            raise ValueError(
                f"'table' is only allowed for kind='table', got kind='{self.kind.value}'"
            )
        return self

    @property
    def tau_sq(self) -> float:
        """
        Знаковый τ² для разложений малого параметра.

        Для q-фазы возвращает -τ² (замена τ² -> -τ²), для IDENTITY и TABLE: 0.
        """
        if self.kind in (DeformationKind.Q_REAL, DeformationKind.Q_TAYLOR):
            return self.tau**2
        if self.kind is DeformationKind.Q_PHASE:
            return -(self.tau**2)
        return 0.0

    @property
    def q(self) -> complex:
        """Параметр q: e^τ для вещественного случая, e^{iτ} для фазы, 1 иначе."""
        if self.kind in (DeformationKind.Q_REAL, DeformationKind.Q_TAYLOR):
            return complex(math.exp(self.tau))
        if self.kind is DeformationKind.Q_PHASE:
            return cmath.exp(1j * self.tau)
        return 1.0 + 0.0j


def taylor_box(n: int, tau_sq: float) -> float:
    """[n] в низшем порядке по τ: n - (τ²/6)(n - n³); τ² может быть отрицательным."""
    return n - (tau_sq / 6.0) * (n - n**3)


def _table_value(spec: DeformationSpec, n: int) -> float:
    table = spec.table or ()
    if n >= len(table):
        return 1.0
    value = table[n]
    if value <= 0:
        raise InvalidTableError(f"Deformation table entry f({n}) = {value} must be positive")
    return float(value)


def eval_box(spec: DeformationSpec, n: int) -> float:
    """
    Вычислить q-скобку [n].

    Args:
        spec: Описание деформации
        n: Неотрицательное целое

    Returns:
        [n]; для q-фазы значение может быть неположительным (проверяет вызывающий код)
    """
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    if n == 0:
        return 0.0

    kind = spec.kind
    if kind is DeformationKind.IDENTITY:
        return float(n)
    if kind is DeformationKind.Q_TAYLOR:
        return taylor_box(n, spec.tau**2)
    if kind is DeformationKind.Q_REAL:
        if spec.tau < TAYLOR_SWITCH_TAU:
            return taylor_box(n, spec.tau**2)
        return math.sinh(n * spec.tau) / math.sinh(spec.tau)
    if kind is DeformationKind.Q_PHASE:
        if spec.tau < TAYLOR_SWITCH_TAU:
            return taylor_box(n, -(spec.tau**2))
        return math.sin(n * spec.tau) / math.sin(spec.tau)
    # TABLE: [n] := n f²(n)
    return n * _table_value(spec, n) ** 2


def eval_f(spec: DeformationSpec, n: int) -> float:
    """
    Вычислить f(n) = sqrt([n]/n); f(0) = 1 по определению.

    Raises:
        NegativeBracketError: Если [n] <= 0 (q-фаза при большом τ)
        InvalidTableError: Если элемент таблицы неположителен
    """
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    if n == 0 or spec.kind is DeformationKind.IDENTITY:
        return 1.0
    if spec.kind is DeformationKind.TABLE:
        return _table_value(spec, n)

    box = eval_box(spec, n)
    if box <= 0:
        raise NegativeBracketError.at_level(n, box, spec.tau)
    return math.sqrt(box / n)


def validate_up_to(spec: DeformationSpec, n_max: int) -> None:
    """
    Проверить, что f(n) определена и положительна для всех 0 <= n <= n_max.

    Raises:
        NegativeBracketError: Для q-фазы, если [n] <= 0 при некотором n <= n_max
        InvalidTableError: Если таблица некорректна
    """
    if spec.kind is DeformationKind.TABLE:
        table = spec.table or ()
        if abs(table[0] - 1.0) > 1e-12:
            raise InvalidTableError(f"Deformation table must start with f(0) = 1, got {table[0]}")
        for n, value in enumerate(table):
            if value <= 0:
                raise InvalidTableError(
                    f"Deformation table entry f({n}) = {value} must be positive"
                )
        return

    for n in range(1, n_max + 1):
        eval_f(spec, n)
    logger.debug(f"Deformation {spec.kind.value} (tau={spec.tau}) valid up to n={n_max}")


def f_values(spec: DeformationSpec, n_max: int) -> np.ndarray:
    """Вектор f(0), ..., f(n_max)."""
    return np.array([eval_f(spec, n) for n in range(n_max + 1)], dtype=float)


def box_values(spec: DeformationSpec, n_max: int) -> np.ndarray:
    """Вектор [0], ..., [n_max]."""
    return np.array([eval_box(spec, n) for n in range(n_max + 1)], dtype=float)
