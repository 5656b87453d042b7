"""
## iwpt.imaging

A module forming the equivalent imaging channel of an illumination, simulating reception and
scoring least-squares reconstructions.
"""

import logging
import math
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import attr
import numpy as np
from scipy import linalg

from iwpt.channel import ChannelSet
from iwpt.errors import DegenerateInputError, DimensionMismatch, check_dimensions
from iwpt.helpers import csv_text, graymap_text, write
from iwpt.matrix_helpers import as_matrix, as_vector
from iwpt.scene import ScatteringField
from iwpt.type_hints import ComplexMatrix, ComplexVector, Seed, Watts

__all__ = [
    "BeamVector",
    "EquivalentChannel",
    "equivalent_channel",
    "simulate_received",
    "ls_estimate",
    "condition_number",
    "rmse",
    "magnitude_grid",
    "write_reconstruction",
]

logger = logging.getLogger(__name__)

# Singular values below this fraction of the largest are dropped by the pseudo-inverse.
PINV_RTOL = 1e-10
# Below this ratio the equivalent channel is reported as singular.
SINGULAR_RATIO = 1e-14


def _frozen_vector(value) -> ComplexVector:
    vector = np.array(getattr(value, "x", value), dtype=complex).reshape(-1)
    vector.setflags(write=False)
    return vector


@attr.define(slots=True, frozen=True, eq=False)
class BeamVector:
    """
    A class representing an illumination beam ``x`` in √W units.

    Attributes
    ----------
    x : ComplexVector
        The per-antenna weights.
    """

    x: ComplexVector = attr.field(converter=_frozen_vector)

    @classmethod
    def normalized(cls, x, power: Watts) -> "BeamVector":
        """
        Rescales a nonzero vector so ``‖x‖² = power``.

        :param x: The direction.
        :param power: The transmit power ``P_t``.
        :type power: Watts
        :raises: DegenerateInputError
        :return: The beam.
        :rtype: BeamVector
        """
        x = as_vector(x)
        norm = float(np.linalg.norm(x))
        if norm == 0:
            raise DegenerateInputError("Cannot normalize a zero beam.")
        return cls(x * (math.sqrt(power) / norm))

    @property
    def power(self) -> Watts:
        """The transmit power ``‖x‖²``."""
        return float(np.vdot(self.x, self.x).real)

    def __len__(self) -> int:
        return self.x.size


@attr.define(slots=True, frozen=True, eq=False)
class EquivalentChannel:
    """
    A class representing ``H = H_R · diag(H_T x)``, shape (N, K).
    """

    matrix: ComplexMatrix

    @property
    def shape(self) -> Tuple[int, int]:
        return self.matrix.shape


def equivalent_channel(channels: ChannelSet, beam) -> EquivalentChannel:
    """
    Forms the equivalent channel ``H = H_R · diag(H_T x)`` of an illumination.

    :param channels: The channels.
    :type channels: ChannelSet
    :param beam: The beam, a ``BeamVector`` or array.
    :raises: DimensionMismatch
    :return: The equivalent channel.
    :rtype: EquivalentChannel
    """
    x = as_vector(beam)
    check_dimensions(x.shape, (channels.antennas,), "beam")
    illumination = channels.h_t @ x
    return EquivalentChannel(channels.h_r * illumination[None, :])


def simulate_received(
    channels: ChannelSet,
    beam,
    field: Union[ScatteringField, ComplexVector],
    noise_power: Watts,
    seed: Optional[Seed] = None,
) -> ComplexVector:
    """
    Simulates one snapshot ``y = Hγ + n``.

    The noise is circularly-symmetric complex Gaussian with per-entry variance ``σ²``,
    drawn from ``numpy.random.default_rng(seed)``.

    :param channels: The channels.
    :type channels: ChannelSet
    :param beam: The illumination.
    :param field: The scattering coefficients.
    :type field: Union[ScatteringField, ComplexVector]
    :param noise_power: The noise power ``σ²``.
    :type noise_power: Watts
    :param seed: The noise seed.
    :type seed: Optional[Seed]
    :return: The received vector of length N.
    :rtype: ComplexVector
    """
    gamma = np.asarray(getattr(field, "gamma", field), dtype=complex).reshape(-1)
    check_dimensions(gamma.shape, (channels.cells,), "scattering field")
    if noise_power < 0:
        raise ValueError("Noise power cannot be negative.")

    received = equivalent_channel(channels, beam).matrix @ gamma
    if noise_power == 0:
        return received

    rng = np.random.default_rng(seed)
    scale = math.sqrt(noise_power / 2.0)
    noise = rng.normal(scale=scale, size=received.shape) + 1j * rng.normal(
        scale=scale, size=received.shape
    )
    return received + noise


def ls_estimate(channel, received: ComplexVector) -> ComplexVector:
    """
    The least-squares estimate ``γ̂ = H†y``.

    The pseudo-inverse comes from an SVD that drops singular values below
    ``1e-10 · σ_max``.

    :param channel: The equivalent channel (or any N×K matrix).
    :param received: The received vector.
    :type received: ComplexVector
    :raises: DimensionMismatch
    :return: The estimate of length K.
    :rtype: ComplexVector
    """
    matrix = as_matrix(channel)
    received = np.asarray(received, dtype=complex).reshape(-1)
    check_dimensions(received.shape, (matrix.shape[0],), "received vector")
    if matrix.shape[0] < matrix.shape[1]:
        logger.debug(
            "Underdetermined imaging system: %d samples for %d cells", *matrix.shape
        )
    return linalg.pinv(matrix, atol=0.0, rtol=PINV_RTOL) @ received


def condition_number(channel) -> float:
    """
    The ratio of the largest to the smallest singular value of ``H``.

    Returns ``inf`` when ``σ_min < 1e-14 · σ_max``.

    :param channel: The equivalent channel (or any matrix).
    :raises: DegenerateInputError
    :return: The condition number, at least 1.
    :rtype: float
    """
    matrix = as_matrix(channel)
    if not matrix.size:
        raise DegenerateInputError("The condition number of an empty matrix is undefined.")
    singular = linalg.svdvals(matrix)
    largest, smallest = float(singular[0]), float(singular[-1])
    if largest == 0:
        raise DegenerateInputError("The condition number of a zero matrix is undefined.")
    if smallest < SINGULAR_RATIO * largest:
        return math.inf
    return max(largest / smallest, 1.0)


def rmse(estimates: Sequence[ComplexVector], truth) -> float:
    """
    The Monte Carlo root mean square error ``sqrt(mean_t ‖γ̂_t − γ‖²)``.

    :param estimates: One estimate per trial.
    :type estimates: Sequence[ComplexVector]
    :param truth: The true coefficients, a ``ScatteringField`` or array.
    :raises: ValueError
    :return: The RMSE.
    :rtype: float
    """
    if not len(estimates):
        raise ValueError("The RMSE needs at least one estimate.")
    gamma = np.asarray(getattr(truth, "gamma", truth), dtype=complex).reshape(-1)
    stacked = np.asarray(estimates, dtype=complex).reshape(len(estimates), -1)
    if stacked.shape[1] != gamma.size:
        raise DimensionMismatch(
            f"estimates have length {stacked.shape[1]}, expected {gamma.size}"
        )
    errors = np.sum(np.abs(stacked - gamma[None, :]) ** 2, axis=1)
    return math.sqrt(float(np.mean(errors)))


def magnitude_grid(estimate: ComplexVector, shape: Tuple[int, int]) -> np.ndarray:
    """
    Reshapes an estimate into the ROI's (rows, cols) grid of magnitudes.

    :param estimate: The estimate of length K.
    :type estimate: ComplexVector
    :param shape: The ROI side counts.
    :type shape: Tuple[int, int]
    :return: The magnitude grid.
    :rtype: np.ndarray
    """
    estimate = np.asarray(estimate).reshape(-1)
    check_dimensions(estimate.shape, (shape[0] * shape[1],), "estimate")
    return np.abs(estimate).reshape(shape)


async def write_reconstruction(
    grid: np.ndarray, directory: Union[str, Path], name: str
) -> List[Path]:
    """
    Writes a magnitude grid as ``<name>.pgm`` (P2) and ``<name>.csv`` (row, col, magnitude).

    :param grid: The magnitude grid.
    :type grid: np.ndarray
    :param directory: The output directory.
    :type directory: Union[str, Path]
    :param name: The base file name.
    :type name: str
    :return: The written paths.
    :rtype: List[Path]
    """
    directory = Path(directory)
    rows = [(row, col, value) for (row, col), value in np.ndenumerate(grid)]
    return [
        await write(graymap_text(grid), directory / f"{name}.pgm"),
        await write(csv_text(("row", "col", "magnitude"), rows), directory / f"{name}.csv"),
    ]
