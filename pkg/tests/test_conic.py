import numpy as np
import pytest

from iwpt.conic import (
    CvxpyBackend,
    HermitianSdp,
    complex_from_embedding,
    default_backend,
    real_embedding,
)
from iwpt.errors import InfeasibleThresholdError, SolverError
from tests.helpers import random_psd


def test_embedding_preserves_trace_products(rng):
    left, right = random_psd(rng, 4), random_psd(rng, 4, rank=2)
    expected = np.trace(left @ right).real
    embedded = np.trace(real_embedding(left) @ real_embedding(right)) / 2
    assert embedded == pytest.approx(expected, rel=1e-12)


def test_embedding_round_trip(rng):
    matrix = random_psd(rng, 3)
    np.testing.assert_allclose(complex_from_embedding(real_embedding(matrix)), matrix)


def test_embedding_is_symmetric_for_hermitian_input(rng):
    block = real_embedding(random_psd(rng, 3))
    np.testing.assert_allclose(block, block.T, atol=1e-15)


def test_unconstrained_minimum_is_smallest_eigenvector():
    problem = HermitianSdp(
        objective=np.diag([1.0, 3.0]).astype(complex),
        power=2.0,
        inequality=np.diag([0.0, 1.0]).astype(complex),
        bound=0.0,
    )
    solution = CvxpyBackend().solve(problem)
    np.testing.assert_allclose(solution.matrix, np.diag([2.0, 0.0]), atol=1e-6)
    assert np.trace(solution.matrix).real == pytest.approx(2.0, rel=1e-9)


def test_active_inequality_splits_the_power():
    problem = HermitianSdp(
        objective=np.diag([1.0, 3.0]).astype(complex),
        power=1.0,
        inequality=np.diag([0.0, 1.0]).astype(complex),
        bound=0.5,
    )
    solution = CvxpyBackend().solve(problem)
    assert np.trace(problem.objective @ solution.matrix).real == pytest.approx(2.0, abs=1e-6)
    assert solution.matrix[1, 1].real >= 0.5 - 1e-6
    assert np.linalg.eigvalsh(solution.matrix).min() >= -1e-12


def test_complex_objective(rng):
    objective = random_psd(rng, 3, power=3.0)
    problem = HermitianSdp(
        objective=objective, power=1.0, inequality=np.zeros((3, 3), complex), bound=0.0
    )
    solution = default_backend().solve(problem)
    smallest = np.linalg.eigvalsh(objective)[0]
    value = np.trace(objective @ solution.matrix).real
    assert value == pytest.approx(smallest, abs=1e-6)


def test_infeasible_bound_raises():
    problem = HermitianSdp(
        objective=np.eye(2, dtype=complex),
        power=1.0,
        inequality=np.diag([0.0, 1.0]).astype(complex),
        bound=2.0,
    )
    with pytest.raises(InfeasibleThresholdError):
        CvxpyBackend().solve(problem)


def test_unknown_solvers_fail():
    problem = HermitianSdp(
        objective=np.eye(2, dtype=complex),
        power=1.0,
        inequality=np.eye(2, dtype=complex),
        bound=0.0,
    )
    with pytest.raises(SolverError):
        CvxpyBackend(solvers=("NOT_A_SOLVER",)).solve(problem)


def test_accuracy_must_be_positive():
    with pytest.raises(ValueError):
        CvxpyBackend(accuracy=0.0)
