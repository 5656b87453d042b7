"""
## iwpt.hybrid

A module containing the partially connected hybrid array: RF chain ``i`` drives antenna row
``i`` through ``N_e`` unit-modulus phase shifters, so ``x = Q w`` with a block-structured
N×N_d analog matrix ``Q``.

The hybrid beam is fitted to a fully digital beam by alternating closed-form updates of the
digital vector and the phases.
"""

import logging
import math
from pathlib import Path
from typing import List, Optional, Tuple, Union

import attr
import numpy as np
from scipy import linalg

from iwpt.channel import ChannelSet
from iwpt.digital import (
    SolveDiagnostics,
    SolverConfig,
    build_trace_kernel,
    solve_digital,
    trace_objective,
)
from iwpt.errors import DegenerateInputError, check_dimensions
from iwpt.helpers import csv_text, write
from iwpt.imaging import BeamVector, condition_number, equivalent_channel
from iwpt.matrix_helpers import as_vector
from iwpt.type_hints import ComplexMatrix, ComplexVector, RealVector, Seed, Watts
from iwpt.wpt import beam_harvested_power

__all__ = [
    "HybridPrecoder",
    "HybridMetrics",
    "compose",
    "digital_update",
    "analog_update",
    "alternating_optimize",
    "hybrid_tradeoff",
    "write_precoder",
]

logger = logging.getLogger(__name__)

TWO_PI = 2 * np.pi


def _phase_matrix(value) -> RealVector:
    phases = np.mod(np.array(value, dtype=float), TWO_PI)
    if phases.ndim != 2:
        raise ValueError("Phases must be a (chains, elements) matrix.")
    phases.setflags(write=False)
    return phases


def _weights(value) -> ComplexVector:
    weights = np.array(value, dtype=complex).reshape(-1)
    weights.setflags(write=False)
    return weights


@attr.define(slots=True, frozen=True, eq=False)
class HybridPrecoder:
    """
    A class representing a hybrid precoder.

    Storing phases keeps every analog entry exactly unit-modulus.

    Attributes
    ----------
    phases : RealVector
        The phases ``φ_il`` in ``[0, 2π)``, shape (N_d, N_e).
    weights : ComplexVector
        The digital vector ``w`` of length N_d.
    """

    phases: RealVector = attr.field(converter=_phase_matrix)
    weights: ComplexVector = attr.field(converter=_weights)

    def __attrs_post_init__(self) -> None:
        check_dimensions(self.weights.shape, (self.chains,), "digital vector")

    @property
    def chains(self) -> int:
        """The number of RF chains ``N_d``."""
        return self.phases.shape[0]

    @property
    def elements(self) -> int:
        """The number of antennas per chain ``N_e``."""
        return self.phases.shape[1]

    @property
    def analog_matrix(self) -> ComplexMatrix:
        """
        The N×N_d analog matrix: rows ``i·N_e .. (i+1)·N_e − 1`` of column ``i`` hold
        ``e^{jφ_il}``, every other entry is zero.
        """
        chains, elements = self.phases.shape
        matrix = np.zeros((chains * elements, chains), dtype=complex)
        rows = np.arange(chains * elements)
        matrix[rows, rows // elements] = np.exp(1j * self.phases).reshape(-1)
        return matrix


@attr.define(slots=True)
class HybridMetrics:
    """
    A class containing the scores of a hybrid beam.
    """

    residuals: List[float]
    """``‖x* − Q w‖`` after each alternating iteration."""
    trace_objective: float
    condition_number: float
    achieved_power: Watts
    constraint_met: bool
    """If the hybrid beam reaches the threshold. It is reported, never enforced."""
    digital: Optional[SolveDiagnostics] = None
    """The diagnostics of the digital solve, when it was run here."""


def compose(precoder: HybridPrecoder) -> BeamVector:
    """
    The beam ``x = Q w``, i.e. ``x[i·N_e + l] = e^{jφ_il} w_i``.

    :param precoder: The precoder.
    :type precoder: HybridPrecoder
    :return: The beam.
    :rtype: BeamVector
    """
    return BeamVector(
        (np.exp(1j * precoder.phases) * precoder.weights[:, None]).reshape(-1)
    )


def digital_update(phases, x_star, tx_power: Watts) -> ComplexVector:
    """
    The least-squares digital vector ``w = (Q^H Q)^{-1} Q^H x*`` for fixed phases,
    rescaled so ``‖Q w‖² = P_t``.

    The Gram matrix is ``N_e · I``, so the rescaled vector has ``‖w‖² = P_t / N_e``.

    :param phases: The phases, shape (N_d, N_e).
    :param x_star: The target beam.
    :param tx_power: The transmit power ``P_t``.
    :type tx_power: Watts
    :raises: DegenerateInputError, DimensionMismatch
    :return: The digital vector.
    :rtype: ComplexVector
    """
    analog = HybridPrecoder(phases, np.zeros(np.shape(phases)[0])).analog_matrix
    target = as_vector(x_star)
    check_dimensions(target.shape, (analog.shape[0],), "target beam")

    gram = analog.conj().T @ analog
    weights = linalg.solve(gram, analog.conj().T @ target, assume_a="her")
    composed = float(np.linalg.norm(analog @ weights))
    if composed == 0:
        raise DegenerateInputError(
            "The target beam is orthogonal to every subarray; the digital vector is zero."
        )
    return weights * (math.sqrt(tx_power) / composed)


def analog_update(
    weights, x_star, elements: Optional[int] = None, previous=None
) -> RealVector:
    """
    The per-element optimal phases ``φ_il = ∠x*[i·N_e + l] − ∠w_i`` in ``[0, 2π)``.

    A chain whose weight is zero has no optimal phases. It keeps its ``previous`` phases
    when they are given; otherwise the call fails.

    :param weights: The digital vector ``w``.
    :param x_star: The target beam.
    :param elements: The number of antennas per chain, inferred when omitted.
    :type elements: Optional[int]
    :param previous: The current phases, shape (N_d, N_e).
    :raises: DegenerateInputError, DimensionMismatch
    :return: The phases, shape (N_d, N_e).
    :rtype: RealVector
    """
    weights = np.asarray(weights, dtype=complex).reshape(-1)
    target = as_vector(x_star)
    if elements is None:
        elements = target.size // max(weights.size, 1)
    check_dimensions(target.shape, (weights.size * elements,), "target beam")
    silent = weights == 0
    if np.any(silent) and previous is None:
        raise DegenerateInputError("A zero digital weight leaves its phases undefined.")

    target = target.reshape(weights.size, elements)
    phases = np.mod(np.angle(target) - np.angle(weights)[:, None], TWO_PI)
    if np.any(silent):
        previous = np.asarray(previous, dtype=float)
        check_dimensions(previous.shape, phases.shape, "previous phases")
        phases[silent] = previous[silent]
        logger.debug(
            "Chains %s have zero weight and keep their phases", np.flatnonzero(silent)
        )
    return phases


def alternating_optimize(
    x_star,
    chains: int,
    elements: int,
    tx_power: Watts,
    max_iterations: int = 10,
    seed: Optional[Seed] = 0,
) -> Tuple[HybridPrecoder, List[float]]:
    """
    Fits a hybrid precoder to a beam by alternating the digital and analog updates.

    The phases start uniformly random from ``numpy.random.default_rng(seed)``. The loop
    reaches its fixed point at the second iteration; later iterations repeat it.

    :param x_star: The target beam of length ``N_d · N_e``.
    :param chains: The number of RF chains ``N_d``.
    :type chains: int
    :param elements: The number of antennas per chain ``N_e``.
    :type elements: int
    :param tx_power: The transmit power ``P_t``.
    :type tx_power: Watts
    :param max_iterations: The number of iterations ``T_max``, at least 2.
    :type max_iterations: int
    :param seed: The seed of the initial phases.
    :type seed: Optional[Seed]
    :raises: DegenerateInputError, DimensionMismatch, ValueError
    :return: The precoder and the residual after each iteration.
    :rtype: Tuple[HybridPrecoder, List[float]]
    """
    if max_iterations < 2:
        raise ValueError("Alternating optimization needs at least two iterations.")
    target = as_vector(x_star)
    check_dimensions(target.shape, (chains * elements,), "target beam")

    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, TWO_PI, size=(chains, elements))
    residuals: List[float] = []

    for iteration in range(1, max_iterations + 1):
        weights = digital_update(phases, target, tx_power)
        phases = analog_update(weights, target, elements, previous=phases)
        precoder = HybridPrecoder(phases, weights)
        residuals.append(float(np.linalg.norm(target - compose(precoder).x)))
        logger.debug("Alternating iteration %d: residual=%r", iteration, residuals[-1])

    return precoder, residuals


def hybrid_tradeoff(
    channels: ChannelSet,
    g,
    tx_power: Watts,
    threshold: Watts,
    efficiency: float,
    config: Optional[SolverConfig],
    chains: int,
    elements: int,
    *,
    digital_beam: Optional[BeamVector] = None,
    max_iterations: int = 10,
    seed: Optional[Seed] = 0,
) -> Tuple[BeamVector, HybridMetrics]:
    """
    Designs the hybrid beam for a power threshold: the digital beam is solved (unless
    given) and then matched by alternating optimization.

    The hybrid beam meets the power budget by construction but not necessarily the
    threshold; the achieved power is reported as is.

    :param channels: The channels.
    :type channels: ChannelSet
    :param g: The power-transfer channel ``G``.
    :param tx_power: The transmit power ``P_t``.
    :type tx_power: Watts
    :param threshold: The power threshold ``E_r``.
    :type threshold: Watts
    :param efficiency: The conversion efficiency ``ζ``.
    :type efficiency: float
    :param config: The digital solver configuration.
    :type config: Optional[SolverConfig]
    :param chains: The number of RF chains ``N_d``.
    :type chains: int
    :param elements: The number of antennas per chain ``N_e``.
    :type elements: int
    :param digital_beam: A precomputed digital beam for the same threshold.
    :type digital_beam: Optional[BeamVector]
    :param max_iterations: The alternating iterations.
    :type max_iterations: int
    :param seed: The seed of the initial phases.
    :type seed: Optional[Seed]
    :raises: InfeasibleThresholdError, SolverError, DegenerateInputError
    :return: The hybrid beam and its metrics.
    :rtype: Tuple[BeamVector, HybridMetrics]
    """
    kernel = build_trace_kernel(channels)
    diagnostics = None
    if digital_beam is None:
        digital_beam, diagnostics = solve_digital(
            kernel, g, tx_power, threshold, efficiency, config
        )

    precoder, residuals = alternating_optimize(
        digital_beam, chains, elements, tx_power, max_iterations=max_iterations, seed=seed
    )
    beam = compose(precoder)
    achieved = beam_harvested_power(g, beam, efficiency)
    metrics = HybridMetrics(
        residuals=residuals,
        trace_objective=trace_objective(kernel, beam),
        condition_number=condition_number(equivalent_channel(channels, beam)),
        achieved_power=achieved,
        constraint_met=achieved >= threshold * (1 - 1e-6),
        digital=diagnostics,
    )
    if not metrics.constraint_met:
        logger.warning(
            "Hybrid beam harvests %r W, below the threshold %r W", achieved, threshold
        )
    return beam, metrics


async def write_precoder(
    precoder: HybridPrecoder, directory: Union[str, Path]
) -> List[Path]:
    """
    Writes ``phases.csv`` (chain, element, phase_radians) and ``digital.csv``
    (chain, w_re, w_im).

    :param precoder: The precoder.
    :type precoder: HybridPrecoder
    :param directory: The output directory.
    :type directory: Union[str, Path]
    :return: The written paths.
    :rtype: List[Path]
    """
    directory = Path(directory)
    phases = [(i, l, value) for (i, l), value in np.ndenumerate(precoder.phases)]
    weights = [(i, value.real, value.imag) for i, value in enumerate(precoder.weights)]
    return [
        await write(
            csv_text(("chain", "element", "phase_radians"), phases),
            directory / "phases.csv",
        ),
        await write(csv_text(("chain", "w_re", "w_im"), weights), directory / "digital.csv"),
    ]
