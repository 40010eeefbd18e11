"""Интегрирование dρ/dt = L(ρ) методом Рунге-Кутты 4-го порядка с диагностикой."""

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, List, NamedTuple, Optional, Tuple

import numpy as np

from .environment import EnvironmentCoefficients
from .errors import LeakageExceededWarning, StepUnstableError
from .generator import DeformedLiouvillian, DensityMatrix
from .moments import MomentState, full_moment_rhs

logger = logging.getLogger(__name__)

HERMITIZE_THRESHOLD = 1e-12

Rhs = Callable[[np.ndarray], np.ndarray]


class TrajectoryRecord(NamedTuple):
    """Диагностика состояния в момент выборки."""

    t: float
    trace: float
    purity: float
    mean_n: float
    mean_n2: float
    min_eig: float
    top_pop: float

    @classmethod
    def of(cls, t: float, rho: DensityMatrix) -> "TrajectoryRecord":
        p = rho.populations()
        n = np.arange(rho.dim, dtype=float)
        return cls(
            t=float(t),
            trace=rho.trace(),
            purity=rho.purity(),
            mean_n=float(np.dot(p, n)),
            mean_n2=float(np.dot(p, n * n)),
            min_eig=rho.min_eigenvalue(),
            top_pop=rho.top_population(2),
        )


@dataclass
class IntegrationResult:
    """Результат интегрирования траектории."""

    records: List[TrajectoryRecord]
    final_state: DensityMatrix
    snapshots: List[Tuple[float, DensityMatrix]] = field(default_factory=list)
    leakage_exceeded: bool = False
    positivity_violated: bool = False
    rehermitizations: int = 0
    steps: int = 0
    dt: float = 0.0


def default_dt(env: EnvironmentCoefficients) -> float:
    """Шаг по умолчанию: 0.01/λ, не больше 0.1/ω."""
    return min(0.01 / env.lambda_, 0.1 / env.omega)


def rk4_step(rhs: Rhs, rho: np.ndarray, h: float) -> np.ndarray:
    """Один шаг классического метода Рунге-Кутты 4-го порядка."""
    k1 = rhs(rho)
    k2 = rhs(rho + 0.5 * h * k1)
    k3 = rhs(rho + 0.5 * h * k2)
    k4 = rhs(rho + h * k3)
    return rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step_halving_check(rhs: Rhs, rho: np.ndarray, h: float, tol: float) -> float:
    """
    Сравнить один шаг h с двумя шагами h/2.

    Returns:
        Максимальное поэлементное расхождение

    Raises:
        StepUnstableError: Если расхождение больше tol
    """
    full = rk4_step(rhs, rho, h)
    half = rk4_step(rhs, rk4_step(rhs, rho, 0.5 * h), 0.5 * h)
    discrepancy = float(np.max(np.abs(full - half)))
    if not math.isfinite(discrepancy) or discrepancy > tol:
        raise StepUnstableError(
            f"Step-halving discrepancy {discrepancy:.3e} exceeds tolerance {tol:.1e} "
            f"at dt={h:.6g}; reduce dt"
        )
    logger.debug(f"Step-halving check passed: dt={h:.6g}, discrepancy={discrepancy:.3e}")
    return discrepancy


def integrate(
    liouvillian: DeformedLiouvillian,
    rho0: DensityMatrix,
    t_final: float,
    dt: Optional[float] = None,
    sample_every: int = 1,
    *,
    keep_snapshots: bool = False,
    hermitize: bool = True,
    leakage_tol: float = 1e-8,
    positivity_tol: float = 1e-8,
    halving_tol: float = 1e-6,
) -> IntegrationResult:
    """
    Проинтегрировать траекторию с фиксированным шагом.

    Шаг подгоняется так, чтобы целое число шагов точно попадало в t_final.
    Записи делаются на шаге 0, каждые sample_every шагов и на последнем шаге.

    Args:
        liouvillian: Генератор
        rho0: Начальное состояние
        t_final: Конечное время (>= 0)
        dt: Шаг (по умолчанию default_dt)
        sample_every: Период выборки в шагах
        keep_snapshots: Сохранять матрицы плотности в точках выборки
        hermitize: Восстанавливать эрмитовость в точках выборки
        leakage_tol: Порог населенности двух верхних уровней
        positivity_tol: Порог отрицательности минимального собственного значения
        halving_tol: Допуск проверки удвоения шага

    Returns:
        IntegrationResult

    Raises:
        StepUnstableError: Если шаг слишком велик
    """
    if t_final < 0:
        raise ValueError(f"t_final must be nonnegative, got {t_final}")
    if sample_every < 1:
        raise ValueError(f"sample_every must be positive, got {sample_every}")
    if dt is None:
        dt = default_dt(liouvillian.env)
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    liouvillian._check_dim(rho0)

    n_steps = max(1, math.ceil(t_final / dt - 1e-9)) if t_final > 0 else 0
    h = t_final / n_steps if n_steps else 0.0

    result = IntegrationResult(records=[], final_state=rho0, steps=n_steps, dt=h)

    def sample(t: float, state: DensityMatrix) -> None:
        record = TrajectoryRecord.of(t, state)
        result.records.append(record)
        if keep_snapshots:
            result.snapshots.append((t, state))
        if record.top_pop > leakage_tol and not result.leakage_exceeded:
            result.leakage_exceeded = True
            message = (
                f"Population of the two highest Fock levels {record.top_pop:.3e} exceeds "
                f"{leakage_tol:.1e} at t={t:.6g}; increase fock_dim"
            )
            logger.warning(message)
            warnings.warn(message, LeakageExceededWarning, stacklevel=3)
        if record.min_eig < -positivity_tol and not result.positivity_violated:
            result.positivity_violated = True
            logger.warning(
                f"Minimum eigenvalue {record.min_eig:.3e} below -{positivity_tol:.1e} at t={t:.6g}"
            )

    sample(0.0, rho0)
    if n_steps == 0:
        return result

    rhs = liouvillian.rhs
    rho = np.array(rho0.elements, dtype=complex)
    step_halving_check(rhs, rho, h, halving_tol)

    logger.info(
        f"Integrating: dim={liouvillian.dim}, t_final={t_final}, dt={h:.6g}, steps={n_steps}"
    )
    for step in range(1, n_steps + 1):
        rho = rk4_step(rhs, rho, h)
        if step % sample_every != 0 and step != n_steps:
            continue
        t = step * h
        deviation = float(np.max(np.abs(rho - rho.conj().T)))
        if hermitize and deviation > HERMITIZE_THRESHOLD:
            rho = 0.5 * (rho + rho.conj().T)
            result.rehermitizations += 1
            logger.info(f"Re-hermitized state at t={t:.6g} (deviation {deviation:.3e})")
        sample(t, DensityMatrix(rho, validate=False))

    result.final_state = DensityMatrix(rho, validate=False)
    return result


def moment_consistency_check(
    liouvillian: DeformedLiouvillian, rho: DensityMatrix
) -> Tuple[MomentState, MomentState]:
    """
    Сравнить Tr[N L(ρ)], Tr[N² L(ρ)] с правыми частями уравнений для моментов.

    Returns:
        (lhs, rhs)
    """
    drho = liouvillian.apply(rho)
    n = liouvillian.number
    diag = np.real(np.diag(drho))
    lhs = MomentState(float(np.dot(n, diag)), float(np.dot(n * n, diag)))
    rhs = full_moment_rhs(rho, liouvillian, liouvillian.ops.spec, form="generic")
    return lhs, rhs
