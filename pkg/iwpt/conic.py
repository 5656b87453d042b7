"""
## iwpt.conic

A module containing the conic backend used by the digital beam design.

A :class:`HermitianSdp` is the problem

    minimize    trace(C R)
    subject to  trace(R) = power
                trace(A R) >= bound
                R Hermitian PSD

Backends implement :class:`ConicBackend`. The shipped :class:`CvxpyBackend` embeds the
complex problem in a real symmetric one of twice the size and hands it to cvxpy.
"""

import logging
from typing import Optional, Protocol, Sequence, Tuple

import attr
import cvxpy as cp
import numpy as np
from scipy import linalg

from iwpt.errors import InfeasibleThresholdError, SolverError
from iwpt.matrix_helpers import hermitianize
from iwpt.type_hints import ComplexMatrix, Watts

__all__ = [
    "HermitianSdp",
    "SdpSolution",
    "ConicBackend",
    "CvxpyBackend",
    "real_embedding",
    "complex_from_embedding",
    "default_backend",
]

logger = logging.getLogger(__name__)

ACCEPTED_STATUSES = (cp.OPTIMAL, cp.OPTIMAL_INACCURATE)
INFEASIBLE_STATUSES = (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE)


def real_embedding(matrix: ComplexMatrix) -> np.ndarray:
    """
    Embeds a complex N×N matrix as the real 2N×2N block ``[[Re, −Im], [Im, Re]]``.

    For Hermitian ``C`` and ``R``, ``trace(C R) = trace(emb(C) emb(R)) / 2``.

    :param matrix: The complex matrix.
    :type matrix: ComplexMatrix
    :return: The real embedding.
    :rtype: np.ndarray
    """
    real, imag = matrix.real, matrix.imag
    return np.block([[real, -imag], [imag, real]])


def complex_from_embedding(block: np.ndarray) -> ComplexMatrix:
    """
    Recovers a complex matrix from a real 2N×2N block.

    Blocks that are not exactly structured (as returned by a generic symmetric solver
    variable) are projected onto the structured subspace first.

    :param block: The real block matrix.
    :type block: np.ndarray
    :return: The complex matrix.
    :rtype: ComplexMatrix
    """
    size = block.shape[0] // 2
    x11, x12 = block[:size, :size], block[:size, size:]
    x21, x22 = block[size:, :size], block[size:, size:]
    return 0.5 * (x11 + x22) + 0.5j * (x21 - x12)


def _psd_projection(matrix: ComplexMatrix, power: Watts) -> ComplexMatrix:
    # Clips the negative eigenvalues left by the solver tolerances and restores the trace.
    values, vectors = linalg.eigh(hermitianize(matrix))
    values = np.clip(values, 0.0, None)
    total = values.sum()
    if total > 0:
        values *= power / total
    return hermitianize((vectors * values) @ vectors.conj().T)


@attr.define(slots=True, frozen=True, eq=False)
class HermitianSdp:
    """
    A class representing a linear-objective Hermitian SDP with one trace equality and one
    linear inequality.

    Attributes
    ----------
    objective : ComplexMatrix
        The Hermitian objective matrix ``C``.
    power : Watts
        The trace of the variable.
    inequality : ComplexMatrix
        The Hermitian PSD inequality matrix ``A``.
    bound : float
        The inequality right-hand side.
    """

    objective: ComplexMatrix
    power: Watts
    inequality: ComplexMatrix
    bound: float

    @property
    def size(self) -> int:
        """The dimension N of the variable."""
        return self.objective.shape[0]


@attr.define(slots=True, frozen=True, eq=False)
class SdpSolution:
    """
    A class representing the output of a backend.
    """

    matrix: ComplexMatrix
    """The primal solution ``R``, Hermitian PSD with the requested trace."""
    status: str
    """The status reported by the solver."""
    solver: str
    """The name of the solver that produced the solution."""

    @property
    def inaccurate(self) -> bool:
        return self.status == cp.OPTIMAL_INACCURATE


class ConicBackend(Protocol):
    """
    The interface of a conic backend.
    """

    def solve(self, problem: HermitianSdp) -> SdpSolution:
        """
        Solves the problem.

        :raises: InfeasibleThresholdError, SolverError
        """
        ...


def _solver_options(solver: str, accuracy: float) -> dict:
    match solver:
        case "CLARABEL":
            return {"tol_gap_abs": accuracy, "tol_gap_rel": accuracy, "tol_feas": accuracy}
        case "SCS":
            return {"eps_abs": accuracy, "eps_rel": accuracy, "max_iters": 100_000}
        case _:
            return {}


@attr.define(slots=True)
class CvxpyBackend:
    """
    A conic backend built on cvxpy.

    The data is normalized before hand-off: ``C`` and ``A`` by their spectral norms and
    ``R`` by the trace, so the solver tolerances act on order-one numbers.

    Attributes
    ----------
    solvers : Sequence[str]
        The solvers to try, in order.
    accuracy : float
        The requested solver accuracy.
    """

    solvers: Sequence[str] = attr.field(default=("CLARABEL", "SCS"), converter=tuple)
    accuracy: float = attr.field(default=1e-9)

    @accuracy.validator
    def _check_accuracy(self, attribute, value) -> None:
        if not value > 0:
            raise ValueError("The solver accuracy must be positive.")

    def _build(self, problem: HermitianSdp) -> Tuple[cp.Problem, cp.Variable]:
        objective_scale = float(linalg.norm(problem.objective, 2)) or 1.0
        inequality_scale = float(linalg.norm(problem.inequality, 2)) or 1.0

        objective = real_embedding(hermitianize(problem.objective) / objective_scale)
        inequality = real_embedding(hermitianize(problem.inequality) / inequality_scale)
        bound = problem.bound / (inequality_scale * problem.power)

        size = 2 * problem.size
        variable = cp.Variable((size, size), symmetric=True)
        constraints = [
            variable >> 0,
            0.5 * cp.trace(variable) == 1.0,
            0.5 * cp.sum(cp.multiply(inequality, variable)) >= bound,
        ]
        program = cp.Problem(
            cp.Minimize(0.5 * cp.sum(cp.multiply(objective, variable))), constraints
        )
        return program, variable

    def solve(self, problem: HermitianSdp) -> SdpSolution:
        """
        Solves the problem with the first solver that succeeds.

        :param problem: The problem.
        :type problem: HermitianSdp
        :raises: InfeasibleThresholdError, SolverError
        :return: The solution.
        :rtype: SdpSolution
        """
        program, variable = self._build(problem)
        installed = set(cp.installed_solvers())
        failures = []

        for solver in self.solvers:
            if solver not in installed:
                failures.append(f"{solver}: not installed")
                continue
            try:
                program.solve(solver=solver, **_solver_options(solver, self.accuracy))
            except cp.error.SolverError as error:
                logger.warning("Solver %s failed: %s", solver, error)
                failures.append(f"{solver}: {error}")
                continue

            if program.status in INFEASIBLE_STATUSES:
                raise InfeasibleThresholdError(
                    f"The power constraint cannot be met ({solver} reports {program.status})."
                )
            if program.status not in ACCEPTED_STATUSES or variable.value is None:
                logger.warning("Solver %s returned status %s", solver, program.status)
                failures.append(f"{solver}: {program.status}")
                continue

            if program.status == cp.OPTIMAL_INACCURATE:
                logger.warning("Solver %s reports an inaccurate solution", solver)

            matrix = problem.power * complex_from_embedding(np.asarray(variable.value))
            return SdpSolution(
                matrix=_psd_projection(matrix, problem.power),
                status=program.status,
                solver=solver,
            )

        raise SolverError("All conic solvers failed: " + "; ".join(failures))


def default_backend(
    accuracy: float = 1e-9, solvers: Optional[Sequence[str]] = None
) -> CvxpyBackend:
    """Returns the cvxpy backend with the given accuracy."""
    if solvers is None:
        return CvxpyBackend(accuracy=accuracy)
    return CvxpyBackend(solvers=solvers, accuracy=accuracy)

