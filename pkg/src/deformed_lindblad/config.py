"""Конфигурация симуляции (JSON/YAML) и настройки окружения через pydantic-settings."""

import json
import logging
import os
import re
from pathlib import Path
from typing import Any, List, Literal, Optional, Tuple, Union

import numpy as np
import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .deformation import DeformationSpec, validate_up_to
from .environment import (
    ConstraintCheck,
    EnvironmentCoefficients,
    Temperature,
    constraint_report,
    diffusion_from_couplings,
)
from .errors import (
    ConfigParseError,
    ConfigValidationError,
    DeformedLindbladError,
    DimensionMismatchError,
    InvalidStateError,
)
from .generator import DensityMatrix, gibbs_state

# Загружаем .env файл
load_dotenv()

logger = logging.getLogger(__name__)

_ENV_VAR = re.compile(r"^\$\{([^}:]+)(?::([^}]*))?\}$")


class RuntimeSettings(BaseSettings):
    """Настройки процесса из переменных окружения DLINDBLAD_*."""

    log: str = Field(default="WARNING", description="Уровень логирования (DEBUG, INFO, ...)")
    max_vectorized_dim: int = Field(
        default=60, ge=2, description="Максимальная D для плотной матрицы D² x D²"
    )
    workers: Optional[int] = Field(
        default=None, ge=1, description="Число процессов для --sweep (по умолчанию CPU count)"
    )

    model_config = SettingsConfigDict(env_prefix="DLINDBLAD_")


class TemperatureConfig(BaseModel):
    """Температура: ровно одно из theta или coth."""

    model_config = ConfigDict(extra="forbid")

    theta: Optional[float] = Field(default=None, gt=0, description="ħω/2kT")
    coth: Optional[float] = Field(default=None, ge=1, description="coth(ħω/2kT)")

    @model_validator(mode="after")
    def _exactly_one(self) -> "TemperatureConfig":
        if (self.theta is None) == (self.coth is None):
            raise ValueError("temperature must set exactly one of 'theta' or 'coth'")
        return self

    def to_temperature(self) -> Temperature:
        if self.theta is not None:
            return Temperature.from_theta(self.theta)
        return Temperature.from_coth(self.coth)


class EnvironmentConfig(BaseModel):
    """Блок среды: тепловая, общая (D_qq, D_pp, D_pq) или через связи (a_j, b_j)."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    omega: float = Field(default=1.0, gt=0, description="Частота осциллятора")
    lambda_: Optional[float] = Field(default=None, alias="lambda", gt=0, description="λ")
    temperature: Optional[Union[Literal["zero"], TemperatureConfig]] = Field(
        default=None, description="Температура для тепловой формы"
    )
    d_qq: Optional[float] = Field(default=None, alias="D_qq")
    d_pp: Optional[float] = Field(default=None, alias="D_pp")
    d_pq: Optional[float] = Field(default=None, alias="D_pq")
    couplings: Optional[List[Tuple[float, float, float, float]]] = Field(
        default=None, description="Строки [Re a_j, Im a_j, Re b_j, Im b_j]"
    )

    @model_validator(mode="after")
    def _exactly_one_form(self) -> "EnvironmentConfig":
        diffusion = (self.d_qq, self.d_pp, self.d_pq)
        forms = [
            self.temperature is not None,
            any(v is not None for v in diffusion),
            self.couplings is not None,
        ]
        if sum(forms) != 1:
            raise ValueError(
                "environment must use exactly one form: "
                "'temperature', 'D_qq/D_pp/D_pq' or 'couplings'"
            )
        if self.couplings is not None:
            if self.lambda_ is not None:
                raise ValueError("'lambda' is derived from 'couplings' and must not be given")
            return self
        if self.lambda_ is None:
            raise ValueError("'lambda' is required for thermal and generic environments")
        if forms[1] and any(v is None for v in diffusion):
            raise ValueError("generic environment requires all of D_qq, D_pp, D_pq")
        return self

    @property
    def form(self) -> str:
        if self.temperature is not None:
            return "thermal"
        if self.couplings is not None:
            return "couplings"
        return "generic"

    def coupling_pairs(self) -> List[Tuple[complex, complex]]:
        return [(complex(ar, ai), complex(br, bi)) for ar, ai, br, bi in self.couplings or []]

    def temperature_value(self) -> Temperature:
        if self.temperature == "zero":
            return Temperature.zero()
        return self.temperature.to_temperature()

    def diffusion(self) -> Tuple[float, float, float, float]:
        """(λ, D_qq, D_pp, D_pq) без проверки ограничений."""
        if self.form == "couplings":
            return diffusion_from_couplings(self.coupling_pairs())
        if self.form == "thermal":
            coth = self.temperature_value().coth
            lam = self.lambda_
            return lam, 0.5 * lam / self.omega * coth, 0.5 * lam * self.omega * coth, 0.0
        return self.lambda_, self.d_qq, self.d_pp, self.d_pq

    def constraint_checks(self) -> List[ConstraintCheck]:
        lam, d_qq, d_pp, d_pq = self.diffusion()
        return constraint_report(self.omega, lam, d_qq, d_pp, d_pq)

    def build(self) -> EnvironmentCoefficients:
        """
        Построить проверенные коэффициенты.

        Raises:
            ConstraintViolationError, NonContractiveError, NonDissipativeError
        """
        if self.form == "thermal":
            return EnvironmentCoefficients.thermal(
                self.omega, self.lambda_, self.temperature_value()
            )
        if self.form == "couplings":
            return EnvironmentCoefficients.from_environment_couplings(
                self.omega, self.coupling_pairs()
            )
        return EnvironmentCoefficients.from_diffusion(
            self.omega, self.lambda_, self.d_qq, self.d_pp, self.d_pq
        )


class InitialStateConfig(BaseModel):
    """Начальное состояние: ровно одно из fock, thermal, populations, matrix."""

    model_config = ConfigDict(extra="forbid")

    fock: Optional[int] = Field(default=None, ge=0, description="Номер уровня Фока")
    thermal: Optional[float] = Field(default=None, gt=0, description="θ состояния Гиббса")
    populations: Optional[List[float]] = Field(default=None, description="Диагональ ρ")
    matrix: Optional[List[List[Tuple[float, float]]]] = Field(
        default=None, description="Матрица из пар [re, im]"
    )

    @model_validator(mode="after")
    def _exactly_one(self) -> "InitialStateConfig":
        chosen = [v is not None for v in (self.fock, self.thermal, self.populations, self.matrix)]
        if sum(chosen) != 1:
            raise ValueError(
                "initial_state must set exactly one of 'fock', 'thermal', 'populations', 'matrix'"
            )
        return self

    def build(self, dim: int) -> DensityMatrix:
        """
        Построить ρ0 размерности dim.

        Raises:
            InvalidStateError, DimensionMismatchError
        """
        if self.fock is not None:
            return DensityMatrix.fock(dim, self.fock)
        if self.thermal is not None:
            return gibbs_state(dim, self.thermal)
        if self.populations is not None:
            if len(self.populations) > dim:
                raise DimensionMismatchError(
                    f"{len(self.populations)} populations given for fock_dim={dim}"
                )
            padded = np.zeros(dim)
            padded[: len(self.populations)] = self.populations
            return DensityMatrix.from_populations(padded)
        state = DensityMatrix.from_pairs(self.matrix)
        if state.dim != dim:
            raise DimensionMismatchError(
                f"Initial matrix is {state.dim}x{state.dim}, fock_dim={dim}"
            )
        return state


class OutputConfig(BaseModel):
    """Куда и в каком формате писать результат."""

    model_config = ConfigDict(extra="forbid")

    path: Optional[str] = Field(default=None, description="Файл результата (stdout если не задан)")
    format: Literal["csv", "json"] = Field(default="csv", description="Формат траектории")
    dump_final_state: Optional[str] = Field(
        default=None, description="JSON-файл для конечной матрицы плотности"
    )


class SimConfig(BaseModel):
    """Полная конфигурация запуска."""

    model_config = ConfigDict(extra="forbid")

    deformation: DeformationSpec = Field(default_factory=DeformationSpec)
    environment: EnvironmentConfig
    fock_dim: int = Field(default=16, ge=2, description="Размерность усечения D")
    initial_state: InitialStateConfig = Field(
        default_factory=lambda: InitialStateConfig(fock=0)
    )
    t_final: float = Field(default=10.0, ge=0, description="Конечное время")
    dt: Optional[float] = Field(default=None, gt=0, description="Шаг RK4 (по умолчанию 0.01/λ)")
    sample_every: int = Field(default=1, ge=1, description="Период выборки в шагах")
    positivity_tol: float = Field(default=1e-8, gt=0)
    leakage_tol: float = Field(default=1e-8, gt=0)
    hermitize: bool = Field(
        default=True, description="Восстанавливать эрмитовость в точках выборки"
    )
    halving_tol: float = Field(default=1e-6, gt=0, description="Допуск проверки удвоения шага")
    output: OutputConfig = Field(default_factory=OutputConfig)

    @classmethod
    def from_file(cls, path: str) -> "SimConfig":
        """
        Загрузить конфигурацию из JSON (или YAML для .yaml/.yml).

        Raises:
            FileNotFoundError: Если файла нет
            ConfigParseError: При синтаксической ошибке или несоответствии схеме
        """
        config_file = Path(path)
        if not config_file.exists():
            raise FileNotFoundError(f"Config file not found: {path}")

        text = config_file.read_text(encoding="utf-8")
        if config_file.suffix.lower() in (".yaml", ".yml"):
            try:
                data = yaml.safe_load(text)
            except yaml.YAMLError as e:
                mark = getattr(e, "problem_mark", None)
                raise ConfigParseError(
                    f"Invalid YAML in {path}: {e}",
                    line=mark.line + 1 if mark else None,
                    column=mark.column + 1 if mark else None,
                ) from e
        else:
            try:
                data = json.loads(text)
            except json.JSONDecodeError as e:
                raise ConfigParseError(
                    f"Invalid JSON in {path}: {e.msg}", line=e.lineno, column=e.colno
                ) from e

        if not isinstance(data, dict):
            raise ConfigParseError(f"Config root in {path} must be an object")
        return cls.from_dict(cls._substitute_env_vars(data))

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            raise ConfigParseError(f"Config does not match schema:\n{e}") from e

    @staticmethod
    def _substitute_env_vars(data: Any) -> Any:
        """
        Заменить переменные окружения в строковых значениях.

        Пример: ${DLINDBLAD_TAU} -> значение из ENV, ${VAR:0.1} -> значение или 0.1
        """
        if isinstance(data, dict):
            return {key: SimConfig._substitute_env_vars(value) for key, value in data.items()}
        if isinstance(data, list):
            return [SimConfig._substitute_env_vars(item) for item in data]
        if isinstance(data, str):
            match = _ENV_VAR.match(data)
            if not match:
                return data
            var_name, default = match.group(1).strip(), match.group(2)
            value = os.getenv(var_name)
            if value is None:
                if default is None:
                    raise ConfigParseError(
                        f"Environment variable {var_name} is not set (used in config)"
                    )
                value = default.strip()
            # Числа из окружения приходят строками
            return yaml.safe_load(value) if value else value
        return data

    def with_override(self, dotted_key: str, value: Any) -> "SimConfig":
        """Копия с замененным значением по пути вида 'environment.lambda'."""
        data = self.model_dump(by_alias=True, exclude_none=True, mode="json")
        node = data
        keys = dotted_key.split(".")
        for key in keys[:-1]:
            child = node.get(key)
            if child is None:
                child = {}
                node[key] = child
            if not isinstance(child, dict):
                raise ConfigParseError(f"Cannot override '{dotted_key}': '{key}' is not a block")
            node = child
        node[keys[-1]] = value
        return SimConfig.from_dict(data)

    def build_environment(self) -> EnvironmentCoefficients:
        return self.environment.build()

    def build_initial_state(self) -> DensityMatrix:
        return self.initial_state.build(self.fock_dim)

    def validate_physics(self) -> None:
        """
        Проверить физическую корректность конфигурации.

        Raises:
            ConfigValidationError: Со списком всех найденных ошибок
        """
        errors = []

        try:
            self.build_environment()
        except DeformedLindbladError as e:
            errors.append(str(e))

        try:
            validate_up_to(self.deformation, self.fock_dim)
        except DeformedLindbladError as e:
            errors.append(str(e))

        try:
            self.build_initial_state()
        except (InvalidStateError, DimensionMismatchError) as e:
            errors.append(str(e))

        if errors:
            error_msg = "Configuration validation failed:\n" + "\n".join(
                f"  - {error}" for error in errors
            )
            logger.error(error_msg)
            raise ConfigValidationError(error_msg)

        logger.info("Configuration validated successfully")
