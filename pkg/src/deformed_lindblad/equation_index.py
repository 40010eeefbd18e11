"""Таблица соответствия уравнений модели модулям, операциям и тестам."""

import ast
import logging
from pathlib import Path
from typing import Dict, Iterable, List, NamedTuple, Set, Tuple

logger = logging.getLogger(__name__)

EQUATION_COUNT = 57

DOC_HEADER = (
    "# Equation index\n\n"
    "Generated by `scripts/build_equation_index.py`; do not edit by hand.\n\n"
)


class EquationEntry(NamedTuple):
    """Строка индекса: номер уравнения, модуль, операция, тесты вида 'файл::тест'."""

    eq: int
    module: str
    operation: str
    tests: Tuple[str, ...]


ENTRIES: Tuple[EquationEntry, ...] = (
    EquationEntry(1, "fock_ops", "build_operators", (
        "test_fock_ops::test_two_factorizations_agree",
        "test_fock_ops::test_identity_operators",
    )),
    EquationEntry(2, "fock_ops", "check_commutators", (
        "test_fock_ops::test_identity_commutators",
        "test_fock_ops::test_deformed_commutator_interior",
    )),
    EquationEntry(3, "fock_ops", "check_commutators", (
        "test_fock_ops::test_deformed_commutator_interior",
        "test_fock_ops::test_commutator_diagonal_against_bracket",
    )),
    EquationEntry(4, "deformation", "eval_f", (
        "test_deformation::test_box_equals_n_f_squared",
        "test_deformation::test_f_of_zero_is_one",
    )),
    EquationEntry(5, "fock_ops", "check_commutators", (
        "test_fock_ops::test_commutator_diagonal_against_bracket",
        "test_fock_ops::test_top_level_is_excluded_from_commutator_check",
    )),
    EquationEntry(6, "deformation", "eval_box", (
        "test_deformation::test_q_real_box_of_two",
        "test_deformation::test_q_phase_box_is_sine_ratio",
        "test_deformation::test_q_real_limit_tau_to_zero",
    )),
    EquationEntry(7, "fock_ops", "build_operators", (
        "test_fock_ops::test_a_matrix_elements_match_bracket",
        "test_fock_ops::test_q_real_lowering_matrix_element",
    )),
    EquationEntry(9, "generator", "DeformedLiouvillian.rhs", (
        "test_generator::test_undeformed_reduction",
        "test_generator::test_hermiticity_is_preserved",
    )),
    EquationEntry(10, "environment", "from_environment_couplings", (
        "test_environment::test_couplings_sign_convention",
        "test_environment::test_couplings_common_phase_invariance",
    )),
    EquationEntry(11, "fock_ops", "quadratures", (
        "test_fock_ops::test_quadratures",
    )),
    EquationEntry(12, "generator", "undeformed_reference_rhs", (
        "test_generator::test_undeformed_reduction",
    )),
    EquationEntry(13, "environment", "from_diffusion", (
        "test_environment::test_from_diffusion_example",
        "test_environment::test_d1_nonzero_otherwise",
    )),
    EquationEntry(14, "environment", "diffusion_from_couplings", (
        "test_environment::test_couplings_sign_convention",
        "test_environment::test_couplings_are_additive",
    )),
    EquationEntry(15, "environment", "constraint_report", (
        "test_environment::test_constraint_iii_violation",
        "test_environment::test_positive_diffusion_required",
        "test_config::test_constraint_violation",
    )),
    EquationEntry(16, "generator", "gibbs_state", (
        "test_generator::test_gibbs_state_is_stationary",
        "test_generator::test_stationary_eigenvector_is_gibbs_state",
        "test_evolve::test_relaxation_to_gibbs_state",
    )),
    EquationEntry(17, "environment", "thermal", (
        "test_environment::test_thermal_example",
        "test_environment::test_thermal_always_valid",
    )),
    EquationEntry(18, "generator", "DeformedLiouvillian.apply", (
        "test_generator::test_operator_form_matches_number_representation",
        "test_generator::test_single_excitation_decay_at_zero_temperature",
    )),
    EquationEntry(19, "generator", "thermal_reference_rhs", (
        "test_generator::test_thermal_form_through_deformed_ladder_operators",
    )),
    EquationEntry(20, "generator", "DeformedLiouvillian.apply", (
        "test_generator::test_zero_temperature_thermal_form_has_no_excitation",
        "test_generator::test_vacuum_is_stationary_at_zero_temperature",
    )),
    EquationEntry(21, "evolve", "moment_consistency_check", (
        "test_evolve::test_moment_consistency_undeformed",
        "test_moments::test_undeformed_reduction",
    )),
    EquationEntry(22, "evolve", "moment_consistency_check", (
        "test_evolve::test_moment_consistency_deformed",
    )),
    EquationEntry(23, "moments", "full_moment_rhs", (
        "test_moments::test_box_form_matches_generic",
    )),
    EquationEntry(24, "moments", "full_moment_rhs", (
        "test_moments::test_box_form_matches_generic",
        "test_moments::test_vacuum_at_zero_temperature",
    )),
    EquationEntry(25, "deformation", "taylor_box", (
        "test_deformation::test_q_taylor_box_of_two_exact",
        "test_deformation::test_taylor_remainder_bound",
    )),
    EquationEntry(26, "moments", "full_moment_rhs", (
        "test_moments::test_q_taylor_generic_equals_taylor_form",
    )),
    EquationEntry(27, "moments", "full_moment_rhs", (
        "test_moments::test_q_taylor_generic_equals_taylor_form",
    )),
    EquationEntry(28, "moments", "neglected_cubic_term", (
        "test_moments::test_neglected_cubic_term",
    )),
    EquationEntry(29, "moments", "truncated_rhs", (
        "test_moments::test_closure_is_exact_on_low_levels",
    )),
    EquationEntry(30, "moments", "truncated_rhs", (
        "test_moments::test_closure_is_exact_on_low_levels",
        "test_moments::test_undeformed_finite_temperature",
    )),
    EquationEntry(31, "moments", "truncated_rhs", (
        "test_moments::test_zero_temperature_example",
        "test_moments::test_zero_temperature_matches_matrix",
    )),
    EquationEntry(32, "moments", "truncated_rhs", (
        "test_moments::test_zero_temperature_example",
    )),
    EquationEntry(33, "moments", "MomentState", (
        "test_moments::test_moments_of_state",
    )),
    EquationEntry(34, "moments", "MomentSystem.m", (
        "test_moments::test_eigenvalues",
    )),
    EquationEntry(35, "moments", "MomentSystem.apply", (
        "test_moments::test_zero_temperature_matches_matrix",
    )),
    EquationEntry(36, "moments", "MomentSystem.eigen_propagator", (
        "test_moments::test_propagator_matches_eigen_path_and_expm",
    )),
    EquationEntry(37, "moments", "MomentSystem.rates", (
        "test_moments::test_rates_example",
        "test_moments::test_eigenvalues",
    )),
    EquationEntry(38, "moments", "solve_t0", (
        "test_moments::test_closed_form_exponents",
        "test_moments::test_satisfies_ode",
    )),
    EquationEntry(39, "moments", "solve_t0", (
        "test_moments::test_closed_form_exponents",
        "test_moments::test_satisfies_ode",
    )),
    EquationEntry(40, "moments", "solve_t0", (
        "test_moments::test_initial_condition",
        "test_moments::test_undeformed_values",
    )),
    EquationEntry(41, "moments", "solve_t0", (
        "test_moments::test_initial_condition",
        "test_moments::test_undeformed_values",
    )),
    EquationEntry(42, "moments", "solve_t0_leading", (
        "test_moments::test_close_to_exact_solution",
        "test_main::test_initial_row",
    )),
    EquationEntry(43, "moments", "solve_t0_leading", (
        "test_moments::test_q_phase_replacement",
        "test_main::test_monotone_decay",
    )),
    EquationEntry(44, "moments", "solve_t0_leading", (
        "test_moments::test_undeformed_limit_is_exact",
        "test_evolve::test_undeformed_decay_of_fock_state",
        "test_main::test_undeformed_columns",
    )),
    EquationEntry(45, "moments", "solve_t0_leading", (
        "test_moments::test_undeformed_limit_is_exact",
        "test_main::test_undeformed_columns",
    )),
    EquationEntry(46, "generator", "DeformedLiouvillian.apply_number_rep", (
        "test_generator::test_operator_form_matches_number_representation",
        "test_generator::test_ground_state_element_from_number_representation",
        "test_generator::test_strong_q_phase_matches_number_representation",
    )),
    EquationEntry(47, "populations", "population_rhs", (
        "test_populations::test_matches_generator_diagonal",
    )),
    EquationEntry(48, "populations", "population_rhs", (
        "test_populations::test_matches_generator_diagonal",
        "test_populations::test_steady_state_is_fixed_point",
    )),
    EquationEntry(49, "populations", "rates", (
        "test_populations::test_undeformed_example",
        "test_populations::test_ground_state_cannot_decay",
    )),
    EquationEntry(50, "populations", "rates", (
        "test_populations::test_q_real_example",
    )),
    EquationEntry(51, "populations", "population_rhs", (
        "test_populations::test_probability_conservation",
        "test_populations::test_converges_to_steady_state",
    )),
    EquationEntry(52, "populations", "steady_state", (
        "test_populations::test_geometric_distribution",
        "test_populations::test_deformation_independence",
    )),
    EquationEntry(53, "populations", "detailed_balance_report", (
        "test_populations::test_steady_state_residual",
        "test_populations::test_uniform_distribution_violates_balance",
    )),
    EquationEntry(54, "populations", "steady_state", (
        "test_populations::test_thermal_ratio_is_boltzmann_factor",
    )),
    EquationEntry(55, "populations", "steady_state", (
        "test_populations::test_inverse_partition_function_from_ground_state",
    )),
    EquationEntry(56, "populations", "partition_function", (
        "test_populations::test_converges_to_closed_form",
        "test_populations::test_tail_bound",
    )),
    EquationEntry(57, "populations", "boltzmann_distribution", (
        "test_populations::test_boltzmann_identity",
        "test_main::test_geometric_ratio",
    )),
)

OUT_OF_SCOPE: Dict[int, str] = {
    8: "general Markovian generator; only its oscillator specialization is implemented",
}


def required_equations() -> Set[int]:
    """Номера уравнений, которые должны быть покрыты: все, кроме исключенных."""
    return set(range(1, EQUATION_COUNT + 1)) - set(OUT_OF_SCOPE)


def coverage_gaps(entries: Iterable[EquationEntry] = ENTRIES) -> List[int]:
    """Уравнения без строки в индексе или без тестов."""
    covered = {entry.eq for entry in entries if entry.tests}
    return sorted(required_equations() - covered)


def collect_test_names(tests_dir: Path) -> Dict[str, Set[str]]:
    """Имена тестовых функций и методов по файлам test_*.py."""
    names: Dict[str, Set[str]] = {}
    for path in sorted(tests_dir.glob("test_*.py")):
        tree = ast.parse(path.read_text(encoding="utf-8"), filename=str(path))
        names[path.stem] = {
            node.name
            for node in ast.walk(tree)
            if isinstance(node, ast.FunctionDef) and node.name.startswith("test_")
        }
    return names


def missing_tests(tests_dir: Path, entries: Iterable[EquationEntry] = ENTRIES) -> List[str]:
    """Ссылки 'файл::тест' из индекса, которых нет в каталоге тестов."""
    names = collect_test_names(tests_dir)
    missing = []
    for entry in entries:
        for ref in entry.tests:
            file_name, _, test_name = ref.partition("::")
            if test_name not in names.get(file_name, set()):
                missing.append(ref)
    return missing


def generate_equation_index(entries: Iterable[EquationEntry] = ENTRIES) -> str:
    """
    Сформировать markdown-таблицу покрытия уравнений.

    Returns:
        Таблица со строкой на каждое уравнение 1..57, включая исключенные
    """
    by_eq = {entry.eq: entry for entry in entries}
    lines = [
        "| Eq. | Module | Operation | Tests |",
        "|---|---|---|---|",
    ]
    for eq in range(1, EQUATION_COUNT + 1):
        if eq in OUT_OF_SCOPE:
            lines.append(f"| ({eq}) | - | out of scope: {OUT_OF_SCOPE[eq]} | - |")
            continue
        entry = by_eq.get(eq)
        if entry is None:
            logger.warning(f"Equation ({eq}) has no index entry")
            lines.append(f"| ({eq}) | - | MISSING | - |")
            continue
        tests = "<br>".join(f"`{ref}`" for ref in entry.tests)
        lines.append(f"| ({eq}) | `{entry.module}` | `{entry.operation}` | {tests} |")
    return "\n".join(lines) + "\n"


def render_document(entries: Iterable[EquationEntry] = ENTRIES) -> str:
    """Содержимое docs/equation-index.md."""
    return DOC_HEADER + generate_equation_index(entries)
