"""Уравнения для ⟨N⟩ и ⟨N²⟩: точные правые части, усеченная система и ее решения."""

import logging
import math
from typing import List, NamedTuple, Sequence

import numpy as np
import scipy.linalg as la
from scipy.integrate import solve_ivp

from .deformation import DeformationSpec, box_values, taylor_box
from .generator import DeformedLiouvillian, DensityMatrix

logger = logging.getLogger(__name__)

# Граница применимости разложения по τ²
TAU_SQ_WARN = 0.5
# Граница применимости секулярного члена -2λτ²t
SECULAR_WARN = 0.5


class MomentState(NamedTuple):
    """Вектор (⟨N⟩, ⟨N²⟩)."""

    mean_n: float
    mean_n2: float

    @property
    def variance(self) -> float:
        return self.mean_n2 - self.mean_n**2


def moments_of(rho: DensityMatrix) -> MomentState:
    """⟨N⟩ и ⟨N²⟩ по населенностям ρ."""
    p = rho.populations()
    n = np.arange(rho.dim, dtype=float)
    return MomentState(float(np.dot(p, n)), float(np.dot(p, n * n)))


def neglected_cubic_term(rho: DensityMatrix) -> float:
    """⟨a†³a³⟩ = ⟨N(N-1)(N-2)⟩; член, отброшенный при замыкании N³ -> 3N² - 2N."""
    n = np.arange(rho.dim, dtype=float)
    return rho.expectation_diagonal(n * (n - 1.0) * (n - 2.0))


def _warn_tau_sq(tau_sq: float) -> None:
    if abs(tau_sq) > TAU_SQ_WARN:
        logger.warning(
            f"|tau^2| = {abs(tau_sq):.3g} > {TAU_SQ_WARN}: "
            "small-deformation expansion is unreliable"
        )


class MomentSystem:
    """Линейная система dS/dt = M S для S = (⟨N⟩, ⟨N²⟩) при T = 0."""

    def __init__(self, lambda_: float, tau_sq: float):
        """
        Инициализация MomentSystem.

        Args:
            lambda_: Константа диссипации λ > 0
            tau_sq: Знаковый τ² (отрицательный для q-фазы)
        """
        if lambda_ <= 0:
            raise ValueError(f"lambda must be positive, got {lambda_}")
        if 1.0 + tau_sq == 0.0:
            raise ValueError("1 + tau^2 must be nonzero")
        self.lambda_ = float(lambda_)
        self.tau_sq = float(tau_sq)
        ts = self.tau_sq
        self.m = lambda_ * np.array(
            [
                [ts - 2.0, -ts],
                [2.0 + 3.0 * ts, -3.0 * ts - 4.0],
            ]
        )
        _warn_tau_sq(ts)

    @property
    def rates(self) -> tuple:
        """Скорости затухания 2λ и 2λ(2 + τ²)."""
        return (2.0 * self.lambda_, 2.0 * self.lambda_ * (2.0 + self.tau_sq))

    def propagator(self, t: float) -> np.ndarray:
        """exp(M t) в явном виде."""
        ts = self.tau_sq
        slow, fast = self.rates
        e1 = math.exp(-slow * t)
        e2 = math.exp(-fast * t)
        k = 1.0 / (2.0 * (1.0 + ts))
        return k * np.array(
            [
                [(2.0 + 3.0 * ts) * e1 - ts * e2, -ts * (e1 - e2)],
                [(2.0 + 3.0 * ts) * (e1 - e2), -ts * e1 + (2.0 + 3.0 * ts) * e2],
            ]
        )

    def eigen_propagator(self, t: float) -> np.ndarray:
        """exp(M t) через разложение M = V diag(μ) V⁻¹."""
        mu, vectors = la.eig(self.m)
        result = vectors @ np.diag(np.exp(mu * t)) @ la.inv(vectors)
        return np.real(result)

    def apply(self, s: MomentState) -> MomentState:
        ds = self.m @ np.array(s)
        return MomentState(float(ds[0]), float(ds[1]))


def truncated_rhs(
    theta_coth: float, tau_sq: float, s: MomentState, lambda_: float
) -> MomentState:
    """
    Замкнутая система для ⟨N⟩, ⟨N²⟩ при произвольной температуре.

    [N] разложена до τ², N³ заменено на 3N² - 2N.
    """
    if theta_coth < 1.0:
        raise ValueError(f"coth factor must be >= 1, got {theta_coth}")
    _warn_tau_sq(tau_sq)
    c = theta_coth
    h = 0.5 * tau_sq
    n, n2 = s
    d_n = lambda_ * (h * (c - 3.0) * n2 - (2.0 - h * (c + 1.0)) * n + c - 1.0)
    d_n2 = lambda_ * (
        (h * (11.0 * c - 17.0) - 4.0) * n2 + (4.0 * c - 2.0 - h * (5.0 * c - 11.0)) * n + c - 1.0
    )
    return MomentState(d_n, d_n2)


def solve_t0(lambda_: float, tau_sq: float, s0: MomentState, t: float) -> MomentState:
    """
    Точное решение усеченной системы при T = 0.

    Raises:
        ValueError: Если 1 + τ² = 0
    """
    s = MomentSystem(lambda_, tau_sq).propagator(t) @ np.array(s0, dtype=float)
    return MomentState(float(s[0]), float(s[1]))


def solve_t0_leading(lambda_: float, tau_sq: float, s0: MomentState, t: float) -> MomentState:
    """
    Решение при T = 0 в первом порядке по τ²; для q-фазы передается отрицательный τ².

    Содержит секулярный член -2λτ²t, применимо при λtτ² << 1.
    """
    _warn_tau_sq(tau_sq)
    if lambda_ * t * abs(tau_sq) > SECULAR_WARN:
        logger.warning(
            f"lambda*t*tau^2 = {lambda_ * t * abs(tau_sq):.3g} > {SECULAR_WARN}: "
            "secular term makes the leading-order solution unreliable"
        )
    n0, n20 = s0
    h = 0.5 * tau_sq
    fast = math.exp(-4.0 * lambda_ * t)
    slow_part = math.exp(-2.0 * lambda_ * t) * (h * n20 - (1.0 + h) * n0)
    mean_n = fast * h * (n20 - n0) - slow_part
    mean_n2 = fast * (1.0 + h - 2.0 * lambda_ * tau_sq * t) * (n20 - n0) - slow_part
    return MomentState(mean_n, mean_n2)


def long_time_limit(lambda_: float, tau_sq: float) -> MomentState:
    """Предел t -> ∞ при T = 0: вакуум."""
    if lambda_ <= 0:
        raise ValueError(f"lambda must be positive, got {lambda_}")
    if 1.0 + tau_sq == 0.0:
        raise ValueError("1 + tau^2 must be nonzero")
    return MomentState(0.0, 0.0)


def full_moment_rhs(
    rho: DensityMatrix,
    liouvillian: DeformedLiouvillian,
    spec: DeformationSpec,
    form: str = "generic",
) -> MomentState:
    """
    Точные (без усечения) d⟨N⟩/dt и d⟨N²⟩/dt для теплового резервуара.

    Args:
        rho: Состояние
        liouvillian: Генератор (задает λ, coth и f)
        spec: Описание деформации (для формы "box")
        form: "generic" через f²(N), "box" через q-скобку [N] или
            "taylor" через [N] = N - (τ²/6)(N - N³) без замыкания

    Raises:
        NonThermalCoefficientsError: Если D1 != 0
    """
    env = liouvillian.env
    coth = env.thermal_coth
    lam = env.lambda_
    n = liouvillian.number

    if form == "generic":
        up = (n + 1.0) * liouvillian.f_plus**2
        down = n * liouvillian.f_zero**2
    elif form in ("box", "taylor"):
        if form == "box":
            boxes = box_values(spec, rho.dim)
        else:
            boxes = np.array([taylor_box(k, spec.tau_sq) for k in range(rho.dim + 1)])
        up = boxes[1:]
        down = boxes[:-1]
    else:
        raise ValueError(f"Unknown form '{form}', expected 'generic', 'box' or 'taylor'")

    mean_up = rho.expectation_diagonal(up)
    mean_down = rho.expectation_diagonal(down)
    d_n = lam * ((coth - 1.0) * mean_up - (coth + 1.0) * mean_down)

    mean_up2 = rho.expectation_diagonal((2.0 * n + 1.0) * up)
    mean_down2 = rho.expectation_diagonal((2.0 * n - 1.0) * down)
    d_n2 = lam * ((coth - 1.0) * mean_up2 - (coth + 1.0) * mean_down2)
    return MomentState(d_n, d_n2)


def integrate_truncated(
    lambda_: float,
    theta_coth: float,
    tau_sq: float,
    s0: MomentState,
    times: Sequence[float],
    *,
    rtol: float = 1e-12,
    atol: float = 1e-14,
) -> List[MomentState]:
    """
    Численно проинтегрировать усеченную систему на сетке times.

    Используется при T > 0, где замкнутой формы нет.
    """
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        return []
    _warn_tau_sq(tau_sq)

    def rhs(_t: float, y: np.ndarray) -> List[float]:
        return list(truncated_rhs(theta_coth, tau_sq, MomentState(y[0], y[1]), lambda_))

    t_end = float(times[-1])
    if t_end == float(times[0]):
        return [MomentState(float(s0[0]), float(s0[1])) for _ in times]

    solution = solve_ivp(
        rhs,
        (float(times[0]), t_end),
        np.array(s0, dtype=float),
        method="DOP853",
        t_eval=times,
        rtol=rtol,
        atol=atol,
    )
    if not solution.success:
        raise RuntimeError(f"Moment integration failed: {solution.message}")
    logger.debug(f"Truncated moment system integrated: {len(times)} points, nfev={solution.nfev}")
    return [MomentState(float(a), float(b)) for a, b in solution.y.T]
