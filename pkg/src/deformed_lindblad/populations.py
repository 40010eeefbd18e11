"""Населенности P(n) = ρ_nn при D1 = 0: цепочка рождения-гибели и стационарное состояние."""

import logging
import math
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from .deformation import DeformationSpec, eval_f, f_values, validate_up_to
from .environment import CONSTRAINT_RTOL, EnvironmentCoefficients
from .errors import InvalidStateError, NonContractiveError
from .generator import DensityMatrix

logger = logging.getLogger(__name__)


class PopulationVector:
    """Распределение P(0), ..., P(D-1)."""

    def __init__(self, values: Sequence[float], *, validate: bool = True):
        self.p = np.array(values, dtype=float)
        if self.p.ndim != 1 or self.p.size == 0:
            raise InvalidStateError("Populations must be a nonempty vector")
        if validate:
            if np.any(self.p < -1e-12):
                raise InvalidStateError(f"Negative population {self.p.min():.3e}")
            total = float(self.p.sum())
            if abs(total - 1.0) > 1e-9:
                raise InvalidStateError(f"Populations sum to {total:.12g}, expected 1")

    @property
    def dim(self) -> int:
        return self.p.size

    @classmethod
    def vacuum(cls, dim: int) -> "PopulationVector":
        p = np.zeros(dim)
        p[0] = 1.0
        return cls(p)

    @classmethod
    def from_density_matrix(cls, rho: DensityMatrix) -> "PopulationVector":
        return cls(rho.populations())

    def to_density_matrix(self) -> DensityMatrix:
        return DensityMatrix.from_populations(self.p)


class SteadyState(NamedTuple):
    """Стационарное распределение цепочки."""

    ratio: float
    populations: PopulationVector
    infinite_range_p0: float


def rates(spec: DeformationSpec, env: EnvironmentCoefficients, n: int) -> Tuple[float, float]:
    """
    Вероятности переходов из уровня n.

    Returns:
        (t₊(n), t₋(n)) = ((D2-λ)(n+1)f²(n+1), (D2+λ)n f²(n))
    """
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    t_plus = env.gain * (n + 1) * eval_f(spec, n + 1) ** 2
    t_minus = env.loss * n * eval_f(spec, n) ** 2 if n > 0 else 0.0
    return t_plus, t_minus


def chain_rates(
    spec: DeformationSpec, env: EnvironmentCoefficients, dim: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Векторы t₊(0..D-1), t₋(0..D-1) с отражающей границей t₊(D-1) = 0."""
    f = f_values(spec, dim - 1)
    n = np.arange(dim, dtype=float)
    t_minus = env.loss * n * f**2
    t_plus = np.zeros(dim)
    t_plus[:-1] = env.gain * n[1:] * f[1:] ** 2
    return t_plus, t_minus


def _as_vector(p) -> np.ndarray:
    if isinstance(p, PopulationVector):
        return p.p
    return np.asarray(p, dtype=float)


def population_rhs(
    spec: DeformationSpec, env: EnvironmentCoefficients, p
) -> np.ndarray:
    """
    dP(n)/dt = t₊(n-1)P(n-1) + t₋(n+1)P(n+1) - [t₊(n) + t₋(n)]P(n).

    Верхняя граница отражающая, поэтому сумма производных равна нулю.
    """
    values = _as_vector(p)
    t_plus, t_minus = chain_rates(spec, env, values.size)
    out = -(t_plus + t_minus) * values
    out[1:] += t_plus[:-1] * values[:-1]
    out[:-1] += t_minus[1:] * values[1:]
    return out


def steady_state(
    spec: DeformationSpec, env: EnvironmentCoefficients, dim: int
) -> SteadyState:
    """
    Стационарное решение P(n) = P(0) r^n, r = (D2-λ)/(D2+λ), нормированное на D уровнях.

    Деформация проверяется, но в результат не входит.

    Raises:
        NonContractiveError: Если D2 < λ
    """
    if dim < 1:
        raise ValueError(f"dim must be positive, got {dim}")
    if env.d2 - env.lambda_ < -CONSTRAINT_RTOL * env.lambda_:
        raise NonContractiveError(
            f"D_2 = {env.d2:.6g} < lambda = {env.lambda_:.6g}: no normalizable steady state"
        )
    validate_up_to(spec, dim - 1)

    ratio = env.gain / env.loss
    weights = ratio ** np.arange(dim, dtype=float)
    populations = PopulationVector(weights / weights.sum())
    tail = populations.p[-1]
    if tail > 1e-10:
        logger.warning(
            f"Steady state puts {tail:.3e} on the highest level n={dim - 1}; increase fock_dim"
        )
    return SteadyState(ratio=ratio, populations=populations, infinite_range_p0=1.0 - ratio)


def detailed_balance_report(spec: DeformationSpec, env: EnvironmentCoefficients, p) -> float:
    """
    max |t₋(n)P(n) - t₊(n-1)P(n-1)| / f²(n) по n = 1..D-1.

    f²(n) > 0 входит в оба потока, поэтому невязка не зависит от деформации побитово.
    """
    values = _as_vector(p)
    dim = values.size
    if dim < 2:
        return 0.0
    validate_up_to(spec, dim - 1)
    n = np.arange(1, dim, dtype=float)
    down = env.loss * n * values[1:]
    up = env.gain * n * values[:-1]
    return float(np.max(np.abs(down - up)))


def energy_levels(omega: float, dim: int) -> np.ndarray:
    """E_n = ω(n + 1/2)."""
    return omega * (np.arange(dim, dtype=float) + 0.5)


def partition_function(omega: float, theta: float, n_max: int) -> float:
    """
    Усеченная статсумма Σ_{n=0}^{n_max} e^{-E_n/kT} = Σ e^{-θ(2n+1)}.

    Args:
        omega: Частота (E_n/kT = 2θE_n/ω)
        theta: ħω/2kT > 0
        n_max: Верхний уровень суммы
    """
    if theta <= 0:
        raise ValueError(f"theta must be positive, got {theta}")
    if n_max < 0:
        raise ValueError(f"n_max must be nonnegative, got {n_max}")
    levels = energy_levels(omega, n_max + 1)
    return float(np.sum(np.exp(-2.0 * theta * levels / omega)))


def partition_function_limit(theta: float) -> float:
    """Предел n_max -> ∞: 1/(2 sinh θ)."""
    return 1.0 / (2.0 * math.sinh(theta))


def boltzmann_distribution(omega: float, theta: float, dim: int) -> np.ndarray:
    """e^{-E_n/kT}/Z на D уровнях; θ = inf дает вакуум."""
    if math.isinf(theta):
        p = np.zeros(dim)
        p[0] = 1.0
        return p
    levels = energy_levels(omega, dim)
    # E_0 сокращается при нормировке
    weights = np.exp(-2.0 * theta * (levels - levels[0]) / omega)
    return weights / weights.sum()


def integrate_populations(
    spec: DeformationSpec,
    env: EnvironmentCoefficients,
    p0,
    t_final: float,
    times: Optional[Sequence[float]] = None,
    *,
    rtol: float = 1e-10,
    atol: float = 1e-13,
) -> np.ndarray:
    """
    Проинтегрировать цепочку населенностей.

    Returns:
        Массив формы (len(times), D); при times=None одна строка в t_final
    """
    values = _as_vector(p0)
    if t_final < 0:
        raise ValueError(f"t_final must be nonnegative, got {t_final}")
    t_eval = np.array([t_final] if times is None else times, dtype=float)
    if t_final == 0:
        return np.tile(values, (t_eval.size, 1))

    t_plus, t_minus = chain_rates(spec, env, values.size)
    generator = np.diag(-(t_plus + t_minus)) + np.diag(t_plus[:-1], -1) + np.diag(t_minus[1:], 1)

    solution = solve_ivp(
        lambda _t, y: generator @ y,
        (0.0, float(t_final)),
        values,
        method="LSODA",
        t_eval=t_eval,
        jac=lambda _t, _y: generator,
        rtol=rtol,
        atol=atol,
    )
    if not solution.success:
        raise RuntimeError(f"Population integration failed: {solution.message}")
    logger.debug(f"Population chain integrated: dim={values.size}, t_final={t_final}")
    return solution.y.T
