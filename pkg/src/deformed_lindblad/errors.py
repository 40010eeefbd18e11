"""Исключения и предупреждения симулятора."""

from typing import Optional


class DeformedLindbladError(Exception):
    """Базовое исключение пакета."""


class NegativeBracketError(DeformedLindbladError, ValueError):
    """q-скобка [n] неположительна (q-фаза при слишком большом τ для данной размерности)."""

    def __init__(
        self,
        message: str,
        n: Optional[int] = None,
        value: Optional[float] = None,
        tau: Optional[float] = None,
    ):
        # args == (message,), иначе не восстанавливается после pickle
        self.n = n
        self.value = value
        self.tau = tau
        super().__init__(message)

    @classmethod
    def at_level(cls, n: int, value: float, tau: float) -> "NegativeBracketError":
        return cls(
            f"q-bracket [{n}] = {value:.6g} <= 0 for tau={tau:.6g}; "
            "reduce tau or the Fock dimension",
            n=n,
            value=value,
            tau=tau,
        )


class InvalidTableError(DeformedLindbladError, ValueError):
    """Некорректная таблица значений f(n)."""


class ConstraintViolationError(DeformedLindbladError, ValueError):
    """Нарушено одно из фундаментальных ограничений на коэффициенты среды."""

    def __init__(
        self, message: str, constraint: Optional[str] = None, margin: Optional[float] = None
    ):
        self.constraint = constraint
        self.margin = margin
        super().__init__(message)


class NonContractiveError(DeformedLindbladError, ValueError):
    """D2 < lambda: стационарное распределение не нормируемо."""


class NonDissipativeError(DeformedLindbladError, ValueError):
    """Константа диссипации, вычисленная из связей со средой, неположительна."""


class NonThermalCoefficientsError(DeformedLindbladError, ValueError):
    """Операция определена только для тепловых коэффициентов (D1 = 0)."""


class DimensionMismatchError(DeformedLindbladError, ValueError):
    """Размерность матрицы плотности не совпадает с размерностью генератора."""


class DimensionTooLargeError(DeformedLindbladError, ValueError):
    """Размерность слишком велика для плотного D^2 x D^2 представления."""


class InvalidStateError(DeformedLindbladError, ValueError):
    """Матрица не является допустимой матрицей плотности."""


class StepUnstableError(DeformedLindbladError, RuntimeError):
    """Проверка делением шага пополам не пройдена."""


class ConfigParseError(DeformedLindbladError, ValueError):
    """Файл конфигурации не удалось разобрать."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class ConfigValidationError(DeformedLindbladError, ValueError):
    """Конфигурация разобрана, но физически некорректна."""


class LeakageExceededWarning(UserWarning):
    """Населенность верхних уровней Фока превысила допустимый порог."""
