"""Коэффициенты диффузии и диссипации среды (единицы ħ = m = k = 1)."""

import logging
import math
from dataclasses import dataclass, replace
from typing import List, NamedTuple, Optional, Sequence, Tuple

from .errors import (
    ConstraintViolationError,
    NonContractiveError,
    NonDissipativeError,
    NonThermalCoefficientsError,
)

logger = logging.getLogger(__name__)

# Относительный допуск для неравенств, выполняющихся как равенства (T = 0)
CONSTRAINT_RTOL = 1e-12


class ConstraintCheck(NamedTuple):
    """Результат проверки одного ограничения."""

    name: str
    description: str
    passed: bool
    margin: float


class Temperature(NamedTuple):
    """Температура бани, закодированная через coth(ħω/2kT); 1 означает T = 0."""

    coth: float

    @classmethod
    def zero(cls) -> "Temperature":
        return cls(1.0)

    @classmethod
    def from_theta(cls, theta: float) -> "Temperature":
        return cls(coth_from_theta(theta))

    @classmethod
    def from_coth(cls, coth: float) -> "Temperature":
        if coth < 1.0:
            raise ValueError(f"coth factor must be >= 1, got {coth}")
        return cls(float(coth))

    @property
    def theta(self) -> float:
        """θ = ħω/2kT; бесконечность при T = 0."""
        return theta_from_coth(self.coth)

    @property
    def is_zero(self) -> bool:
        return self.coth == 1.0


def coth_from_theta(theta: float) -> float:
    """coth θ для θ > 0."""
    if theta <= 0:
        raise ValueError(f"theta must be positive, got {theta}")
    return 1.0 / math.tanh(theta)


def theta_from_coth(coth: float) -> float:
    """Обратная функция к coth; inf для coth = 1."""
    if coth < 1.0:
        raise ValueError(f"coth factor must be >= 1, got {coth}")
    if coth == 1.0:
        return math.inf
    return math.atanh(1.0 / coth)


def constraint_report(
    omega: float, lambda_: float, d_qq: float, d_pp: float, d_pq: float
) -> List[ConstraintCheck]:
    """
    Проверить ограничения (i)-(iii) и условие D2 >= λ без исключений.

    Returns:
        Список проверок с запасами (margin >= 0 означает выполнение)
    """
    d2 = omega * d_qq + d_pp / omega
    det_margin = d_pp * d_qq - d_pq**2 - lambda_**2 / 4.0
    det_scale = max(lambda_**2 / 4.0, abs(d_pp * d_qq))
    d2_margin = d2 - lambda_

    return [
        ConstraintCheck("i", "D_pp > 0", d_pp > 0, d_pp),
        ConstraintCheck("ii", "D_qq > 0", d_qq > 0, d_qq),
        ConstraintCheck(
            "iii",
            "D_pp*D_qq - D_pq^2 >= lambda^2/4",
            det_margin >= -CONSTRAINT_RTOL * det_scale,
            det_margin,
        ),
        ConstraintCheck(
            "d2",
            "D_2 >= lambda",
            d2_margin >= -CONSTRAINT_RTOL * lambda_,
            d2_margin,
        ),
    ]


def diffusion_from_couplings(
    pairs: Sequence[Tuple[complex, complex]],
) -> Tuple[float, float, float, float]:
    """
    (λ, D_qq, D_pp, D_pq) для связей V_j = a_j p + b_j q без проверки ограничений.

    D_qq = Σ|a_j|²/2, D_pp = Σ|b_j|²/2, D_pq = -Re Σ a_j* b_j / 2, λ = -Im Σ a_j* b_j.
    """
    if not pairs:
        raise NonDissipativeError("At least one (a_j, b_j) pair is required")
    if all(a == 0 and b == 0 for a, b in pairs):
        raise NonDissipativeError("All environment couplings are zero")

    cross = sum(complex(a).conjugate() * complex(b) for a, b in pairs)
    d_qq = 0.5 * sum(abs(a) ** 2 for a, _ in pairs)
    d_pp = 0.5 * sum(abs(b) ** 2 for _, b in pairs)
    return -cross.imag, d_qq, d_pp, -0.5 * cross.real


@dataclass(frozen=True)
class EnvironmentCoefficients:
    """Проверенные коэффициенты среды и производные D1, D2."""

    omega: float
    lambda_: float
    d_qq: float
    d_pp: float
    d_pq: float
    d1: complex
    d2: float
    coth_factor: Optional[float] = None

    @classmethod
    def from_diffusion(
        cls, omega: float, lambda_: float, d_qq: float, d_pp: float, d_pq: float
    ) -> "EnvironmentCoefficients":
        """
        Построить коэффициенты из D_qq, D_pp, D_pq и λ.

        Raises:
            ConstraintViolationError: Если нарушено (i), (ii) или (iii)
            NonContractiveError: Если D2 < λ
        """
        if omega <= 0:
            raise ValueError(f"omega must be positive, got {omega}")
        if lambda_ <= 0:
            raise ValueError(f"lambda must be positive, got {lambda_}")

        for check in constraint_report(omega, lambda_, d_qq, d_pp, d_pq):
            if check.passed:
                continue
            if check.name == "d2":
                raise NonContractiveError(
                    f"D_2 = {check.margin + lambda_:.6g} < lambda = {lambda_:.6g}: "
                    "steady state is not normalizable"
                )
            raise ConstraintViolationError(
                f"Constraint ({check.name}) {check.description} violated, "
                f"margin={check.margin:.6g}",
                constraint=check.name,
                margin=check.margin,
            )

        d1 = complex(omega * d_qq - d_pp / omega, 2.0 * d_pq)
        d2 = omega * d_qq + d_pp / omega
        coeffs = cls(
            omega=float(omega),
            lambda_=float(lambda_),
            d_qq=float(d_qq),
            d_pp=float(d_pp),
            d_pq=float(d_pq),
            d1=d1,
            d2=float(d2),
        )
        logger.debug(f"Environment coefficients: D1={d1}, D2={d2}, lambda={lambda_}")
        return coeffs

    @classmethod
    def from_environment_couplings(
        cls, omega: float, pairs: Sequence[Tuple[complex, complex]]
    ) -> "EnvironmentCoefficients":
        """
        Построить коэффициенты из связей V_j = a_j p + b_j q.

        Args:
            omega: Частота осциллятора
            pairs: Пары комплексных (a_j, b_j)

        Raises:
            NonDissipativeError: Если λ = -Im Σ a_j* b_j <= 0
        """
        lambda_, d_qq, d_pp, d_pq = diffusion_from_couplings(pairs)
        if lambda_ <= 0:
            raise NonDissipativeError(
                f"Couplings give lambda = -Im sum(a_j* b_j) = {lambda_:.6g} <= 0"
            )
        return cls.from_diffusion(omega, lambda_, d_qq, d_pp, d_pq)

    @classmethod
    def thermal(
        cls, omega: float, lambda_: float, temperature: Temperature
    ) -> "EnvironmentCoefficients":
        """Коэффициенты теплового резервуара: D_pq = 0, D_pp и D_qq пропорциональны coth."""
        coth = temperature.coth
        d_pp = 0.5 * lambda_ * omega * coth
        d_qq = 0.5 * lambda_ / omega * coth
        coeffs = cls.from_diffusion(omega, lambda_, d_qq, d_pp, 0.0)
        return replace(coeffs, coth_factor=coth)

    @property
    def is_thermal(self) -> bool:
        """D1 = 0 (с точностью округления)."""
        return abs(self.d1) <= CONSTRAINT_RTOL * max(self.d2, self.lambda_)

    @property
    def thermal_coth(self) -> float:
        """coth-фактор: сохраненный или D2/λ при D1 = 0."""
        if self.coth_factor is not None:
            return self.coth_factor
        if not self.is_thermal:
            raise NonThermalCoefficientsError(
                f"Coefficients with D1 = {self.d1} are not of thermal form"
            )
        return self.d2 / self.lambda_

    @property
    def gain(self) -> float:
        """D2 - λ (коэффициент возбуждения); равенство D2 = λ дает ровно 0."""
        value = self.d2 - self.lambda_
        if abs(value) <= CONSTRAINT_RTOL * self.lambda_:
            return 0.0
        return value

    @property
    def loss(self) -> float:
        """D2 + λ (коэффициент релаксации)."""
        return self.d2 + self.lambda_

    @property
    def is_zero_temperature(self) -> bool:
        return self.gain == 0.0


from_diffusion = EnvironmentCoefficients.from_diffusion
from_environment_couplings = EnvironmentCoefficients.from_environment_couplings
thermal = EnvironmentCoefficients.thermal
