"""Точка входа: команды validate, simulate, moments, fig1 (curves), steady, crosscheck."""

import argparse
import csv
import io
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, TextIO, Tuple

import numpy as np
import yaml

from .config import RuntimeSettings, SimConfig
from .deformation import DeformationKind
from .environment import theta_from_coth
from .errors import ConfigParseError, DeformedLindbladError
from .evolve import IntegrationResult, TrajectoryRecord, integrate, moment_consistency_check
from .fock_ops import build_operators
from .generator import DeformedLiouvillian, DensityMatrix, vec
from .moments import (
    MomentState,
    integrate_truncated,
    moments_of,
    solve_t0,
    solve_t0_leading,
)
from .populations import boltzmann_distribution, detailed_balance_report, steady_state

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - [%(filename)s:%(lineno)d] - %(message)s"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2

TRAJECTORY_HEADER = ["t", "trace", "purity", "mean_N", "mean_N2", "min_eig", "top_pop"]
CURVES_HEADER = [
    "t", "qreal_N", "qphase_N", "undeformed_N", "qreal_N2", "qphase_N2", "undeformed_N2"
]

CROSSCHECK_MAX_DIM = 16
GENERATOR_TOL = 1e-12
MOMENT_TOL = 1e-10
# Замыкание отбрасывает ⟨a†³a³⟩; пороги измерены на τ² = 0.2, |3⟩, λt <= 1
CLOSURE_REL_TOL = 0.05
LEADING_ORDER_REL_TOL = 0.08
CLOSURE_KINDS = (
    DeformationKind.IDENTITY,
    DeformationKind.Q_REAL,
    DeformationKind.Q_PHASE,
    DeformationKind.Q_TAYLOR,
)


class UsageError(Exception):
    """Некорректные аргументы командной строки."""


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def configure_logging(level_name: str) -> None:
    """Настроить логирование в stderr (stdout занят данными)."""
    level = logging.getLevelName(level_name.upper())
    unknown = not isinstance(level, int)
    logging.basicConfig(
        level=logging.WARNING if unknown else level,
        format=LOG_FORMAT,
        handlers=[logging.StreamHandler(sys.stderr)],
        force=True,
    )
    if unknown:
        logger.warning(f"Unknown log level '{level_name}', using WARNING")


def fmt(value: float) -> str:
    """Фиксированный формат чисел: 17 значащих цифр."""
    return format(float(value), ".17g")


def write_csv(rows: Iterable[Sequence[float]], header: Sequence[str], out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])


def _emit(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    logger.info(f"Wrote {path}")


def render_trajectory(records: Sequence[TrajectoryRecord], output_format: str) -> str:
    if output_format == "json":
        payload = {"columns": TRAJECTORY_HEADER, "records": [list(r) for r in records]}
        return json.dumps(payload, indent=2) + "\n"
    buffer = io.StringIO()
    write_csv(records, TRAJECTORY_HEADER, buffer)
    return buffer.getvalue()


def state_to_json(rho: DensityMatrix) -> Dict[str, Any]:
    """Матрица в виде вложенных пар [re, im] (читается DensityMatrix.from_pairs)."""
    matrix = [[[float(z.real), float(z.imag)] for z in row] for row in rho.elements]
    return {"dim": rho.dim, "matrix": matrix}


def load_config(path: str) -> SimConfig:
    config = SimConfig.from_file(path)
    logger.info(f"Loaded config {path}: form={config.environment.form}, dim={config.fock_dim}")
    return config


def build_liouvillian(config: SimConfig) -> DeformedLiouvillian:
    ops = build_operators(config.deformation, config.fock_dim)
    return DeformedLiouvillian(ops, config.build_environment())


def run_simulation(config: SimConfig) -> IntegrationResult:
    """Построить генератор и проинтегрировать траекторию по конфигурации."""
    config.validate_physics()
    liouvillian = build_liouvillian(config)
    return integrate(
        liouvillian,
        config.build_initial_state(),
        config.t_final,
        config.dt,
        config.sample_every,
        hermitize=config.hermitize,
        leakage_tol=config.leakage_tol,
        positivity_tol=config.positivity_tol,
        halving_tol=config.halving_tol,
    )


def _write_simulation(
    config: SimConfig, result: IntegrationResult, out: Optional[str], output_format: str
) -> None:
    _emit(render_trajectory(result.records, output_format), out)
    if config.output.dump_final_state:
        _emit(json.dumps(state_to_json(result.final_state)) + "\n", config.output.dump_final_state)


def _simulate_task(payload: Tuple[Dict[str, Any], str, str]) -> Tuple[str, int, bool]:
    """Задача пула процессов: одна траектория, один выходной файл."""
    data, out, output_format = payload
    config = SimConfig.from_dict(data)
    result = run_simulation(config)
    _write_simulation(config, result, out, output_format)
    return out, len(result.records), result.leakage_exceeded


def parse_sweep(spec: str) -> Tuple[str, List[Any]]:
    """'environment.lambda=0.1,0.2' -> ('environment.lambda', [0.1, 0.2])."""
    if "=" not in spec:
        raise UsageError(f"--sweep expects key=v1,v2,..., got '{spec}'")
    key, raw = spec.split("=", 1)
    values = [yaml.safe_load(v.strip()) for v in raw.split(",") if v.strip()]
    if not key.strip() or not values:
        raise UsageError(f"--sweep expects key=v1,v2,..., got '{spec}'")
    return key.strip(), values


def sweep_path(out: str, key: str, value: Any) -> str:
    path = Path(out)
    return str(path.with_name(f"{path.stem}_{key.split('.')[-1]}={value}{path.suffix}"))


def cmd_validate(args: argparse.Namespace) -> int:
    """Проверить ограничения на коэффициенты, D2 >= λ и деформацию до fock_dim."""
    config = load_config(args.config)
    env_config = config.environment
    failed = False

    print(f"environment form: {env_config.form}")
    try:
        lam = env_config.diffusion()[0]
        checks = env_config.constraint_checks()
    except ValueError as e:
        print(f"environment: FAIL ({e})")
        lam, checks = None, []
        failed = True
    if lam is not None and lam <= 0:
        print(f"lambda = {fmt(lam)}: FAIL (non-dissipative couplings)")
        failed = True
    for check in checks:
        status = "PASS" if check.passed else "FAIL"
        print(f"({check.name}) {check.description}: {status} margin={fmt(check.margin)}")
        failed = failed or not check.passed

    try:
        config.validate_physics()
        print(f"deformation {config.deformation.kind.value}: PASS up to n={config.fock_dim}")
    except DeformedLindbladError as e:
        print(f"physics: FAIL\n{e}")
        failed = True

    return EXIT_INVALID if failed else EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    """Проинтегрировать траекторию и записать CSV/JSON."""
    config = load_config(args.config)
    output_format = args.format or config.output.format
    out = args.out or config.output.path

    if args.sweep:
        if out is None:
            raise UsageError("--sweep requires --out (or output.path) for per-value files")
        key, values = parse_sweep(args.sweep)
        payloads = []
        for value in values:
            variant = config.with_override(key, value)
            dump = variant.output.dump_final_state
            if dump:
                variant = variant.with_override(
                    "output.dump_final_state", sweep_path(dump, key, value)
                )
            variant.validate_physics()
            data = variant.model_dump(by_alias=True, exclude_none=True, mode="json")
            payloads.append((data, sweep_path(out, key, value), output_format))
        logger.info(f"Sweep over {key}: {len(values)} values")
        settings = RuntimeSettings()
        with ProcessPoolExecutor(max_workers=settings.workers) as pool:
            for path, n_records, leaked in pool.map(_simulate_task, payloads):
                print(f"{path}: {n_records} records{' (leakage exceeded)' if leaked else ''}")
        return EXIT_OK

    result = run_simulation(config)
    _write_simulation(config, result, out, output_format)
    if result.leakage_exceeded:
        logger.warning("Truncation leakage exceeded the configured bound during the run")
    return EXIT_OK


def cmd_moments(args: argparse.Namespace) -> int:
    """Численно проинтегрировать усеченную систему моментов при температуре конфигурации."""
    config = load_config(args.config)
    config.validate_physics()
    env = config.build_environment()
    coth = env.thermal_coth
    tau_sq = config.deformation.tau_sq
    s0 = moments_of(config.build_initial_state())
    times = np.linspace(0.0, config.t_final, args.points)
    numeric = integrate_truncated(env.lambda_, coth, tau_sq, s0, times)

    header = ["t", "mean_N", "mean_N2"]
    closed: List[Optional[MomentState]] = [None] * len(times)
    if env.is_zero_temperature:
        header += ["closed_N", "closed_N2"]
        closed = [solve_t0(env.lambda_, tau_sq, s0, float(t)) for t in times]

    rows = []
    for t, s, c in zip(times, numeric, closed):
        rows.append([t, *s] + (list(c) if c is not None else []))
    buffer = io.StringIO()
    write_csv(rows, header, buffer)
    _emit(buffer.getvalue(), args.out)
    return EXIT_OK


def curve_rows(
    s0: MomentState = MomentState(3.0, 9.0),
    tau_sq: float = 0.2,
    t_max: float = 3.0,
    points: int = 301,
) -> List[List[float]]:
    """Кривые ⟨N⟩, ⟨N²⟩ в первом порядке по τ² для q = e^τ, q = e^{iτ} и τ = 0 (λ = 1)."""
    rows = []
    for t in np.linspace(0.0, t_max, points):
        real = solve_t0_leading(1.0, tau_sq, s0, float(t))
        phase = solve_t0_leading(1.0, -tau_sq, s0, float(t))
        plain = solve_t0_leading(1.0, 0.0, s0, float(t))
        rows.append(
            [float(t), real.mean_n, phase.mean_n, plain.mean_n]
            + [real.mean_n2, phase.mean_n2, plain.mean_n2]
        )
    return rows


def cmd_fig1(args: argparse.Namespace) -> int:
    rows = curve_rows(MomentState(args.n0, args.n20), args.tau_sq, args.t_max, args.points)
    buffer = io.StringIO()
    write_csv(rows, CURVES_HEADER, buffer)
    _emit(buffer.getvalue(), args.out)
    return EXIT_OK


def steady_report(config: SimConfig) -> Dict[str, Any]:
    """Стационарное распределение, баланс переходов и сравнение с распределением Больцмана."""
    env = config.build_environment()
    result = steady_state(config.deformation, env, config.fock_dim)
    populations = result.populations.p
    report: Dict[str, Any] = {
        "ratio": result.ratio,
        "infinite_range_p0": result.infinite_range_p0,
        "populations": [float(p) for p in populations],
        "detailed_balance_residual": detailed_balance_report(config.deformation, env, populations),
        "boltzmann_match": None,
    }
    if env.is_thermal:
        theta = theta_from_coth(env.thermal_coth)
        boltzmann = boltzmann_distribution(env.omega, theta, config.fock_dim)
        report["boltzmann_match"] = float(np.max(np.abs(populations - boltzmann)))
    return report


def cmd_steady(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    config.validate_physics()
    _emit(json.dumps(steady_report(config), indent=2) + "\n", args.out)
    return EXIT_OK


def _random_hermitian(rng: np.random.Generator, dim: int, support: int) -> DensityMatrix:
    x = rng.normal(size=(support, support)) + 1j * rng.normal(size=(support, support))
    rho = np.zeros((dim, dim), dtype=complex)
    rho[:support, :support] = x @ x.conj().T
    return DensityMatrix(rho / np.trace(rho).real)


def crosscheck_report(config: SimConfig, seed: int = 0) -> List[Tuple[str, float, float, bool]]:
    """
    Сравнить независимые вычисления одних и тех же величин.

    Returns:
        Строки (проверка, отклонение, допуск, пройдена); отклонение nan означает пропуск
    """
    if config.fock_dim > CROSSCHECK_MAX_DIM:
        raise UsageError(
            f"crosscheck requires fock_dim <= {CROSSCHECK_MAX_DIM}, got {config.fock_dim}"
        )
    config.validate_physics()
    liouvillian = build_liouvillian(config)
    env = liouvillian.env
    dim = config.fock_dim
    rng = np.random.default_rng(seed)
    rho0 = config.build_initial_state()
    rows = []

    states = [rho0] + [_random_hermitian(rng, dim, dim) for _ in range(5)]
    matrix = liouvillian.vectorized_matrix(RuntimeSettings().max_vectorized_dim)
    deviation = 0.0
    for s in states:
        reference = liouvillian.apply(s)
        deviation = max(
            deviation,
            float(np.max(np.abs(reference - liouvillian.apply_number_rep(s)))),
            float(np.max(np.abs(vec(reference) - matrix @ vec(s.elements)))),
        )
    rows.append(("generator_equivalence", deviation, GENERATOR_TOL, deviation < GENERATOR_TOL))

    if env.is_thermal:
        # Моментные уравнения точны, пока два верхних уровня пусты
        samples = [_random_hermitian(rng, dim, dim - 2) for _ in range(5)]
        if rho0.top_population(2) == 0.0:
            samples.append(rho0)
        deviation = 0.0
        for s in samples:
            lhs, rhs = moment_consistency_check(liouvillian, s)
            scale = max(1.0, abs(rhs.mean_n), abs(rhs.mean_n2))
            deviation = max(deviation, max(abs(a - b) for a, b in zip(lhs, rhs)) / scale)
        rows.append(("moment_consistency", deviation, MOMENT_TOL, deviation < MOMENT_TOL))
    else:
        rows.append(("moment_consistency", math.nan, MOMENT_TOL, True))

    s0 = moments_of(rho0)
    closure_applies = (
        env.is_thermal
        and env.is_zero_temperature
        and config.deformation.kind in CLOSURE_KINDS
        and s0.mean_n > 0
    )
    if closure_applies:
        tau_sq = config.deformation.tau_sq
        dt = min(config.dt or 0.01 / env.lambda_, 0.01 / env.lambda_)
        sample_every = max(1, int(round(0.05 / env.lambda_ / dt)))
        result = integrate(
            liouvillian, rho0, 1.0 / env.lambda_, dt, sample_every, halving_tol=config.halving_tol
        )
        closed = leading = 0.0
        for record in result.records:
            exact = solve_t0(env.lambda_, tau_sq, s0, record.t)
            approx = solve_t0_leading(env.lambda_, tau_sq, s0, record.t)
            closed = max(closed, abs(record.mean_n - exact.mean_n) / abs(exact.mean_n))
            leading = max(leading, abs(record.mean_n - approx.mean_n) / abs(approx.mean_n))
        rows.append(("ode_vs_closed_form", closed, CLOSURE_REL_TOL, closed < CLOSURE_REL_TOL))
        passed = leading < LEADING_ORDER_REL_TOL
        rows.append(("ode_vs_leading_order", leading, LEADING_ORDER_REL_TOL, passed))
    else:
        rows.append(("ode_vs_closed_form", math.nan, CLOSURE_REL_TOL, True))
        rows.append(("ode_vs_leading_order", math.nan, LEADING_ORDER_REL_TOL, True))
    return rows


def cmd_crosscheck(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    rows = crosscheck_report(config, args.seed or 0)
    failed = False
    for name, deviation, tol, passed in rows:
        if math.isnan(deviation):
            print(f"{name}: SKIPPED")
            continue
        print(f"{name}: deviation={fmt(deviation)} tol={fmt(tol)} {'PASS' if passed else 'FAIL'}")
        failed = failed or not passed
    return EXIT_INVALID if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="dlindblad", description="Deformed Lindblad oscillator simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    def common(p: argparse.ArgumentParser, config_required: bool = True) -> None:
        if config_required:
            p.add_argument("--config", required=True, help="JSON/YAML config file")
        p.add_argument("--out", default=None, help="Output file (stdout if omitted)")
        p.add_argument("--format", choices=["csv", "json"], default=None)
        p.add_argument("--seed", type=int, default=None, help="Seed for crosscheck random states")

    p = sub.add_parser("validate", help="Check environment constraints and deformation validity")
    common(p)
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("simulate", help="Integrate the master equation")
    common(p)
    p.add_argument("--sweep", default=None, help="key=v1,v2,... run one trajectory per value")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("moments", help="Integrate the truncated moment system")
    common(p)
    p.add_argument("--points", type=int, default=101)
    p.set_defaults(handler=cmd_moments)

    p = sub.add_parser(
        "fig1",
        aliases=["curves"],
        help="Leading-order <N>, <N^2> curves for q real, q phase, no deformation",
    )
    common(p, config_required=False)
    p.add_argument("--tau-sq", type=float, default=0.2)
    p.add_argument("--n0", type=float, default=3.0)
    p.add_argument("--n20", type=float, default=9.0)
    p.add_argument("--t-max", type=float, default=3.0)
    p.add_argument("--points", type=int, default=301)
    p.set_defaults(handler=cmd_fig1)

    p = sub.add_parser("steady", help="Steady-state populations and detailed balance")
    common(p)
    p.set_defaults(handler=cmd_steady)

    p = sub.add_parser("crosscheck", help="Run the oracle comparisons")
    common(p)
    p.set_defaults(handler=cmd_crosscheck)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Разобрать аргументы и выполнить команду; возвращает код выхода."""
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (ConfigParseError, FileNotFoundError, UsageError) as e:
        logger.error(f"{args.command}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DeformedLindbladError as e:
        logger.error(f"{args.command}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as e:
        logger.error(f"Fatal error: {e}", exc_info=True)
        return EXIT_USAGE


def cli():
    """CLI точка входа."""
    settings = RuntimeSettings()
    configure_logging(settings.log)
    sys.exit(main())


if __name__ == "__main__":
    cli()
