"""Общие фикстуры: генератор случайных чисел и фабрики состояний."""

from typing import Optional

import numpy as np
import pytest

from deformed_lindblad.generator import DensityMatrix


def random_density_matrix(
    rng: np.random.Generator, dim: int, support: Optional[int] = None
) -> DensityMatrix:
    """Случайная эрмитова положительная матрица следа 1 с носителем на уровнях 0..support-1."""
    support = dim if support is None else support
    x = rng.normal(size=(support, support)) + 1j * rng.normal(size=(support, support))
    rho = np.zeros((dim, dim), dtype=complex)
    rho[:support, :support] = x @ x.conj().T
    rho /= np.trace(rho).real
    return DensityMatrix(0.5 * (rho + rho.conj().T))


def random_diagonal_state(
    rng: np.random.Generator, dim: int, support: Optional[int] = None
) -> DensityMatrix:
    """Случайное диагональное состояние с носителем на уровнях 0..support-1."""
    support = dim if support is None else support
    p = np.zeros(dim)
    p[:support] = rng.random(support)
    return DensityMatrix.from_populations(p / p.sum())


def random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Случайная эрмитова матрица (не обязательно состояние)."""
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (x + x.conj().T)


@pytest.fixture
def rng():
    """Детерминированный генератор случайных чисел."""
    return np.random.default_rng(20240611)
