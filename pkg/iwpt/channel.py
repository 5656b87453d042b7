"""
## iwpt.channel

A module synthesizing the line-of-sight near-field channels of a scene.
"""

import asyncio
import logging
from pathlib import Path
from typing import List, Union

import attr
import numpy as np

from iwpt.errors import ChannelError
from iwpt.helpers import csv_text, require_valid_scene, write
from iwpt.scene import Scene
from iwpt.type_hints import ComplexMatrix, Points, Radians

__all__ = ["ChannelSet", "element_gain", "build_channels", "dump_channels"]

logger = logging.getLogger(__name__)


def element_gain(theta: Union[Radians, np.ndarray], exponent: float = 1.0):
    """
    The element radiation profile ``F(θ) = cos^q θ`` on the front hemisphere, zero behind.

    ``q = 0`` gives an isotropic hemisphere.

    :param theta: The angle from the array normal, in radians. Arrays are accepted.
    :type theta: Union[Radians, np.ndarray]
    :param exponent: The pattern exponent ``q``.
    :type exponent: float
    :return: The nonnegative gain, a float for scalar input.
    """
    theta = np.asarray(theta, dtype=float)
    cosine = np.cos(theta)
    front = theta <= np.pi / 2
    gain = np.where(front, np.power(np.clip(cosine, 0.0, None), exponent), 0.0)
    if gain.ndim == 0:
        return float(gain)
    return gain


def _link_matrix(
    points: Points,
    antennas: Points,
    normal: np.ndarray,
    wavelength: float,
    exponent: float,
    what: str,
) -> ComplexMatrix:
    # Row j holds the link from every antenna to points[j].
    offsets = points[:, None, :] - antennas[None, :, :]
    distance = np.linalg.norm(offsets, axis=-1)
    if distance.size and distance.min() == 0:
        j, n = np.unravel_index(int(np.argmin(distance)), distance.shape)
        raise ChannelError(f"{what} {j} coincides with antenna {n}.")

    cosine = np.einsum("jnd,d->jn", offsets, normal) / np.where(distance > 0, distance, 1.0)
    gain = np.where(cosine >= 0, np.power(np.clip(cosine, 0.0, None), exponent), 0.0)
    return gain * (wavelength / (4 * np.pi * distance)) * np.exp(
        -2j * np.pi * distance / wavelength
    )


@attr.define(slots=True, frozen=True, eq=False)
class ChannelSet:
    """
    A class representing the three channel matrices of a scene.

    Attributes
    ----------
    h_t : ComplexMatrix
        The ROI-transmit channel ``H_T`` with shape (K, N).
    g : ComplexMatrix
        The power-transfer channel ``G`` with shape (M, N); row ``m`` is ``g_m``.
    """

    h_t: ComplexMatrix
    g: ComplexMatrix

    @property
    def h_r(self) -> ComplexMatrix:
        """The ROI-receive channel ``H_R = H_T^T`` (plain transpose) with shape (N, K)."""
        return self.h_t.T

    @property
    def antennas(self) -> int:
        """The number of antennas ``N``."""
        return self.h_t.shape[1]

    @property
    def cells(self) -> int:
        """The number of ROI cells ``K``."""
        return self.h_t.shape[0]

    @property
    def receivers(self) -> int:
        """The number of energy receivers ``M``."""
        return self.g.shape[0]


@require_valid_scene()
def build_channels(scene: Scene) -> ChannelSet:
    """
    Builds ``H_T`` and ``G`` from a scene.

    ``H_T[k, n] = F(Θ_kn) · λ / (4π d_kn) · exp(−j 2π d_kn / λ)`` where ``d_kn`` is the
    distance from antenna ``n`` to cell ``k`` and ``Θ_kn`` is measured from the array normal.
    ``G`` is built the same way from the receiver positions.

    :param scene: The scene.
    :type scene: Scene
    :raises: ChannelError
    :return: The channels.
    :rtype: ChannelSet
    """
    antennas = scene.array.positions
    normal = scene.array.normal
    h_t = _link_matrix(
        scene.roi.cell_centers,
        antennas,
        normal,
        scene.wavelength,
        scene.pattern_exponent,
        "ROI cell",
    )
    g = _link_matrix(
        scene.receivers.positions,
        antennas,
        normal,
        scene.wavelength,
        scene.pattern_exponent,
        "receiver",
    )
    for matrix in (h_t, g):
        matrix.setflags(write=False)

    logger.debug(
        "Built channels: N=%d, K=%d, M=%d", antennas.shape[0], h_t.shape[0], g.shape[0]
    )
    return ChannelSet(h_t=h_t, g=g)


def _matrix_rows(matrix: ComplexMatrix) -> List[tuple]:
    return [
        (row, col, value.real, value.imag)
        for (row, col), value in np.ndenumerate(matrix)
    ]


async def dump_channels(channels: ChannelSet, directory: Union[str, Path]) -> List[Path]:
    """
    Writes ``h_t.csv``, ``h_r.csv`` and ``g.csv`` (columns row, col, re, im) to a directory.

    :param channels: The channels to dump.
    :type channels: ChannelSet
    :param directory: The output directory.
    :type directory: Union[str, Path]
    :return: The written paths.
    :rtype: List[Path]
    """
    directory = Path(directory)
    header = ("row", "col", "re", "im")
    return list(
        await asyncio.gather(
            *(
                write(csv_text(header, _matrix_rows(matrix)), directory / name)
                for name, matrix in (
                    ("h_t.csv", channels.h_t),
                    ("h_r.csv", channels.h_r),
                    ("g.csv", channels.g),
                )
            )
        )
    )
