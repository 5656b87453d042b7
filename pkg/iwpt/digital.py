"""
## iwpt.digital

A module containing the fully digital illumination design: the trace kernel, the
semidefinite relaxation with a rank-one penalty, and the successive convex approximation
loop around it.

The design minimizes ``trace(T R)`` subject to ``ζ trace(G R G^H) ≥ E_r`` and
``trace(R) = P_t`` over PSD ``R``. Rank one is encouraged by the penalty
``η (trace(R) − ‖R‖₂)``, whose concave part is linearized at the previous iterate.
"""

import logging
import math
from pathlib import Path
from typing import List, Optional, Tuple, Union

import attr
import numpy as np

from iwpt.channel import ChannelSet
from iwpt.conic import ConicBackend, HermitianSdp, default_backend
from iwpt.enums import SolveStatus
from iwpt.errors import InfeasibleThresholdError, SolverError, check_dimensions
from iwpt.helpers import csv_text, write
from iwpt.imaging import BeamVector
from iwpt.matrix_helpers import (
    as_matrix,
    as_vector,
    dominant_eigenpair,
    eigen_ratio,
    fix_phase,
    hermitianize,
)
from iwpt.type_hints import ComplexMatrix, Watts
from iwpt.wpt import CovarianceMatrix, e_max, optimal_wpt_beam

__all__ = [
    "TraceKernel",
    "SolverConfig",
    "IterationRecord",
    "SolveDiagnostics",
    "build_trace_kernel",
    "trace_objective",
    "penalty_residual",
    "solve_qsdp_subproblem",
    "solve_digital",
    "write_diagnostics",
]

logger = logging.getLogger(__name__)

# Thresholds within this fraction of E_max are served by the WPT-optimal covariance.
SATURATION_MARGIN = 1e-9
# Extracted beams may fall short of E_r by this fraction before being flagged.
EXTRACTION_SLACK = 1e-6
# Penalty residuals below -RESIDUAL_FLOOR * P_t mean the backend returned a non-PSD iterate.
RESIDUAL_FLOOR = 1e-8

WPT_VIOLATION_FLAG = "rank-1 extraction violated WPT constraint"
RANK_FLAG = "rank-1 tolerance not reached"


def _positive(instance, attribute, value) -> None:
    if value is not None and not value > 0:
        raise ValueError(f"{attribute.name} must be positive, got {value}.")


@attr.define(slots=True, frozen=True, eq=False)
class TraceKernel:
    """
    A class representing the Hermitian PSD kernel ``T`` with ``x^H T x = trace(H H^H)``.
    """

    matrix: ComplexMatrix

    @property
    def scale(self) -> float:
        """The mean eigenvalue ``trace(T) / N``."""
        return float(np.trace(self.matrix).real) / self.matrix.shape[0]


@attr.define(slots=True, frozen=True)
class SolverConfig:
    """
    A class containing the knobs of the digital design.

    Attributes
    ----------
    penalty : Optional[float]
        The rank-one penalty ``η``. ``None`` derives it from the kernel as
        ``penalty_scale · trace(T) / N``.
    penalty_scale : float
        The multiple of the mean kernel eigenvalue used when ``penalty`` is ``None``.
    max_iterations : int
        The iteration cap ``T_max``.
    rank_tolerance : float
        The rank-one tolerance ``ε_rank``, relative to ``P_t``.
    objective_tolerance : float
        The relative objective change ``ε_obj`` treated as a stall.
    solver_accuracy : float
        The conic solver accuracy ``ε_solve``.
    solvers : tuple
        The cvxpy solvers to try, in order.
    """

    penalty: Optional[float] = attr.field(default=None, validator=_positive)
    penalty_scale: float = attr.field(default=1e-2, validator=_positive)
    max_iterations: int = attr.field(default=50)
    rank_tolerance: float = attr.field(default=1e-6, validator=_positive)
    objective_tolerance: float = attr.field(default=1e-8, validator=_positive)
    solver_accuracy: float = attr.field(default=1e-9, validator=_positive)
    solvers: tuple = attr.field(default=("CLARABEL", "SCS"), converter=tuple)

    @max_iterations.validator
    def _check_iterations(self, attribute, value) -> None:
        if value < 1:
            raise ValueError("max_iterations must be at least 1.")

    def penalty_for(self, kernel: TraceKernel) -> float:
        """
        The penalty ``η`` used with a kernel.

        :param kernel: The trace kernel.
        :type kernel: TraceKernel
        :rtype: float
        """
        if self.penalty is not None:
            return self.penalty
        scale = kernel.scale
        return self.penalty_scale * scale if scale > 0 else 1.0

    def backend(self) -> ConicBackend:
        """The conic backend described by this configuration."""
        return default_backend(accuracy=self.solver_accuracy, solvers=self.solvers)


@attr.define(slots=True, frozen=True)
class IterationRecord:
    """
    A class representing one SCA iterate. Iteration 0 is the WPT-optimal starting point.
    """

    iteration: int
    objective: float
    """``trace(T R)``."""
    penalized_objective: float
    """``trace(T R) + η (trace(R) − ‖R‖₂)``."""
    penalty_residual: float
    """``trace(R) − ‖R‖₂``."""
    eigen_ratio: float
    """``λ₂ / λ₁``."""


@attr.define(slots=True)
class SolveDiagnostics:
    """
    A class representing the trace of a digital solve.

    Attributes
    ----------
    threshold : Watts
        The power threshold ``E_r``.
    penalty : float
        The penalty ``η`` that was used.
    records : List[IterationRecord]
        One record per iterate, starting with iteration 0.
    status : Optional[SolveStatus]
        How the loop stopped.
    flags : List[str]
        Conditions the caller should know about.
    power_slack : float
        ``ζ x^H G^H G x − E_r`` for the extracted beam.
    trace_slack : float
        ``‖x‖² − P_t`` for the extracted beam.
    """

    threshold: Watts
    penalty: float
    records: List[IterationRecord] = attr.field(factory=list)
    status: Optional[SolveStatus] = None
    flags: List[str] = attr.field(factory=list)
    power_slack: float = math.nan
    trace_slack: float = math.nan

    @property
    def iterations(self) -> int:
        """The number of subproblems that were solved."""
        return max(len(self.records) - 1, 0)

    @property
    def final_eigen_ratio(self) -> float:
        return self.records[-1].eigen_ratio if self.records else math.nan

    @property
    def objectives(self) -> List[float]:
        return [record.objective for record in self.records]

    @property
    def penalized_objectives(self) -> List[float]:
        return [record.penalized_objective for record in self.records]

    @property
    def penalty_residuals(self) -> List[float]:
        return [record.penalty_residual for record in self.records]

    @property
    def flagged(self) -> bool:
        """If any flag was raised."""
        return bool(self.flags)

    def to_rows(self) -> List[tuple]:
        """The CSV rows ``(iteration, objective, penalty_residual, lambda2_over_lambda1)``."""
        return [
            (r.iteration, r.objective, r.penalty_residual, r.eigen_ratio)
            for r in self.records
        ]


def build_trace_kernel(channels: ChannelSet) -> TraceKernel:
    """
    Builds ``T = H_T^H diag(‖H_R[:, k]‖²) H_T``.

    With ``H = H_R diag(H_T x)`` this gives ``x^H T x = trace(H H^H)`` and
    ``trace(T) = Σ_k ‖H_R[:, k]‖² ‖H_T[k, :]‖²``.

    :param channels: The channels.
    :type channels: ChannelSet
    :return: The kernel.
    :rtype: TraceKernel
    """
    h_t = channels.h_t
    weights = np.sum(np.abs(channels.h_r) ** 2, axis=0)
    kernel = (h_t.conj().T * weights[None, :]) @ h_t
    return TraceKernel(hermitianize(kernel))


def trace_objective(kernel, beam) -> float:
    """
    The imaging surrogate ``x^H T x``.

    :param kernel: The kernel, a ``TraceKernel`` or array.
    :param beam: The beam.
    :rtype: float
    """
    matrix = as_matrix(kernel)
    x = as_vector(beam)
    check_dimensions(x.shape, (matrix.shape[0],), "beam")
    return float(np.vdot(x, matrix @ x).real)


def penalty_residual(covariance) -> float:
    """
    The rank-one residual ``trace(R) − ‖R‖₂``, zero exactly for rank at most one.

    :param covariance: A Hermitian PSD matrix.
    :rtype: float
    """
    matrix = as_matrix(covariance)
    largest, _ = dominant_eigenpair(matrix)
    return float(np.trace(matrix).real) - largest


def _check_threshold(threshold: Watts, ceiling: Watts, accuracy: float) -> None:
    if threshold < 0:
        raise InfeasibleThresholdError(f"The power threshold {threshold} W is negative.")
    if threshold > ceiling * (1 + accuracy):
        raise InfeasibleThresholdError(
            f"The power threshold {threshold} W exceeds E_max = {ceiling} W."
        )


def _saturated(threshold: Watts, ceiling: Watts) -> bool:
    return threshold >= ceiling * (1 - SATURATION_MARGIN)


def solve_qsdp_subproblem(
    kernel,
    g,
    tx_power: Watts,
    threshold: Watts,
    efficiency: float,
    previous,
    penalty: float,
    accuracy: float = 1e-9,
    backend: Optional[ConicBackend] = None,
) -> CovarianceMatrix:
    """
    Solves one convexified step.

    Minimizes ``trace(T R) + η (trace(R) − [‖R_prev‖₂ + trace(u u^H (R − R_prev))])`` over
    PSD ``R`` with ``trace(R) = P_t`` and ``ζ trace(G R G^H) ≥ E_r``, where ``u`` is the
    dominant eigenvector of ``R_prev``. At ``E_r = E_max`` the feasible set is the
    WPT-optimal covariance alone and it is returned without calling the backend.

    :param kernel: The trace kernel ``T``.
    :param g: The power-transfer channel ``G``.
    :param tx_power: The transmit power ``P_t``.
    :type tx_power: Watts
    :param threshold: The power threshold ``E_r``.
    :type threshold: Watts
    :param efficiency: The conversion efficiency ``ζ``.
    :type efficiency: float
    :param previous: The previous iterate ``R_prev``.
    :param penalty: The penalty ``η``, nonnegative.
    :type penalty: float
    :param accuracy: The conic solver accuracy.
    :type accuracy: float
    :param backend: The conic backend, cvxpy by default.
    :type backend: Optional[ConicBackend]
    :raises: InfeasibleThresholdError, SolverError
    :return: The next iterate.
    :rtype: CovarianceMatrix
    """
    matrix = as_matrix(kernel)
    g = np.asarray(g, dtype=complex)
    size = matrix.shape[0]
    previous = as_matrix(previous)
    check_dimensions(previous.shape, (size, size), "previous iterate")
    check_dimensions(g.shape[1:], (size,), "power-transfer channel")
    if penalty < 0:
        raise ValueError("The penalty cannot be negative.")

    ceiling = e_max(g, tx_power, efficiency)
    _check_threshold(threshold, ceiling, accuracy)
    if _saturated(threshold, ceiling):
        return CovarianceMatrix.from_beam(optimal_wpt_beam(g, tx_power))

    # The constant part of the linearization vanishes: u^H R_prev u = ‖R_prev‖₂.
    _, direction = dominant_eigenpair(previous)
    objective = matrix + penalty * (np.eye(size) - np.outer(direction, direction.conj()))
    problem = HermitianSdp(
        objective=hermitianize(objective),
        power=tx_power,
        inequality=efficiency * (g.conj().T @ g),
        bound=threshold,
    )
    backend = backend or default_backend(accuracy=accuracy)
    return CovarianceMatrix(backend.solve(problem).matrix)


def _record(
    iteration: int, matrix: ComplexMatrix, kernel: ComplexMatrix, penalty: float
) -> IterationRecord:
    objective = float(np.trace(kernel @ matrix).real)
    residual = penalty_residual(matrix)
    return IterationRecord(
        iteration=iteration,
        objective=objective,
        penalized_objective=objective + penalty * residual,
        penalty_residual=residual,
        eigen_ratio=eigen_ratio(matrix),
    )


def solve_digital(
    kernel,
    g,
    tx_power: Watts,
    threshold: Watts,
    efficiency: float,
    config: Optional[SolverConfig] = None,
    backend: Optional[ConicBackend] = None,
) -> Tuple[BeamVector, SolveDiagnostics]:
    """
    Designs the fully digital beam for a power threshold.

    The loop starts from ``R = x* x*^H`` and stops when the penalty residual drops below
    ``ε_rank · P_t`` (rank one), when the penalized objective changes by less than
    ``ε_obj`` relative (stalled), or after ``T_max`` subproblems. The beam is
    ``√P_t · u_max`` of the last iterate with its phase fixed. Results that are not rank
    one, or whose beam misses the threshold, are returned with flags.

    :param kernel: The trace kernel ``T``.
    :param g: The power-transfer channel ``G``.
    :param tx_power: The transmit power ``P_t``.
    :type tx_power: Watts
    :param threshold: The power threshold ``E_r``.
    :type threshold: Watts
    :param efficiency: The conversion efficiency ``ζ``.
    :type efficiency: float
    :param config: The solver configuration.
    :type config: Optional[SolverConfig]
    :param backend: The conic backend, built from ``config`` by default.
    :type backend: Optional[ConicBackend]
    :raises: InfeasibleThresholdError, SolverError
    :return: The beam and the diagnostics.
    :rtype: Tuple[BeamVector, SolveDiagnostics]
    """
    config = config or SolverConfig()
    if not isinstance(kernel, TraceKernel):
        kernel = TraceKernel(hermitianize(as_matrix(kernel)))
    matrix = kernel.matrix
    g = np.asarray(g, dtype=complex)

    ceiling = e_max(g, tx_power, efficiency)
    _check_threshold(threshold, ceiling, config.solver_accuracy)

    penalty = config.penalty_for(kernel)
    diagnostics = SolveDiagnostics(threshold=threshold, penalty=penalty)
    backend = backend or config.backend()

    start = optimal_wpt_beam(g, tx_power)
    current = CovarianceMatrix.from_beam(start).matrix
    diagnostics.records.append(_record(0, current, matrix, penalty))

    if _saturated(threshold, ceiling):
        diagnostics.status = SolveStatus.SATURATED
    else:
        objective_scale = kernel.scale * tx_power
        for iteration in range(1, config.max_iterations + 1):
            try:
                current = solve_qsdp_subproblem(
                    matrix,
                    g,
                    tx_power,
                    threshold,
                    efficiency,
                    current,
                    penalty,
                    accuracy=config.solver_accuracy,
                    backend=backend,
                ).matrix
            except SolverError as error:
                error.diagnostics = diagnostics
                raise

            record = _record(iteration, current, matrix, penalty)
            if record.penalty_residual < -RESIDUAL_FLOOR * tx_power:
                raise SolverError(
                    f"Iterate {iteration} is not PSD "
                    f"(penalty residual {record.penalty_residual}).",
                    diagnostics,
                )
            previous = diagnostics.records[-1]
            diagnostics.records.append(record)
            logger.debug(
                "SCA iteration %d: objective=%r residual=%r ratio=%r",
                iteration,
                record.objective,
                record.penalty_residual,
                record.eigen_ratio,
            )

            if record.penalty_residual < config.rank_tolerance * tx_power:
                diagnostics.status = SolveStatus.RANK_ONE
                break
            change = abs(record.penalized_objective - previous.penalized_objective)
            reference = max(abs(record.penalized_objective), objective_scale)
            if change < config.objective_tolerance * reference:
                diagnostics.status = SolveStatus.STALLED
                break
        else:
            diagnostics.status = SolveStatus.ITERATION_LIMIT

        if diagnostics.status is not SolveStatus.RANK_ONE:
            diagnostics.flags.append(RANK_FLAG)
            logger.warning(
                "Digital solve at E_r=%r W stopped without reaching rank one (%s)",
                threshold,
                diagnostics.status,
            )

    _, direction = dominant_eigenpair(current)
    beam = BeamVector(math.sqrt(tx_power) * fix_phase(direction))

    achieved = efficiency * float(np.sum(np.abs(g @ beam.x) ** 2))
    diagnostics.power_slack = achieved - threshold
    diagnostics.trace_slack = beam.power - tx_power
    if achieved < threshold * (1 - EXTRACTION_SLACK):
        diagnostics.flags.append(WPT_VIOLATION_FLAG)
        logger.warning(
            "Extracted beam harvests %r W, below the threshold %r W", achieved, threshold
        )

    logger.info(
        "Digital solve at E_r=%r W: %s after %d iterations",
        threshold,
        diagnostics.status,
        diagnostics.iterations,
    )
    return beam, diagnostics


async def write_diagnostics(
    diagnostics: SolveDiagnostics, path: Union[str, Path]
) -> Path:
    """
    Writes the per-iteration diagnostics as CSV
    (iteration, objective, penalty_residual, lambda2_over_lambda1).

    :param diagnostics: The diagnostics.
    :type diagnostics: SolveDiagnostics
    :param path: The output file.
    :type path: Union[str, Path]
    :return: The written path.
    :rtype: Path
    """
    header = ("iteration", "objective", "penalty_residual", "lambda2_over_lambda1")
    return await write(csv_text(header, diagnostics.to_rows()), path)
