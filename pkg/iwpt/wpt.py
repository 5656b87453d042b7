"""
## iwpt.wpt

A module evaluating harvested power and the closed-form power-optimal beam.
"""

import logging
import math
from typing import Tuple

import attr
import numpy as np
from scipy import linalg

from iwpt.errors import DegenerateInputError, NotHermitianError, check_dimensions
from iwpt.imaging import BeamVector
from iwpt.matrix_helpers import as_matrix, as_vector, fix_phase, is_hermitian
from iwpt.type_hints import ComplexMatrix, RealVector, Watts

__all__ = [
    "CovarianceMatrix",
    "harvested_power",
    "beam_harvested_power",
    "optimal_wpt_beam",
    "e_max",
]

logger = logging.getLogger(__name__)

# Relative Hermitian tolerance for covariances handed in by callers.
HERMITIAN_TOLERANCE = 1e-10


def _frozen_matrix(value) -> ComplexMatrix:
    matrix = np.array(getattr(value, "matrix", value), dtype=complex)
    matrix.setflags(write=False)
    return matrix


@attr.define(slots=True, frozen=True, eq=False)
class CovarianceMatrix:
    """
    A class representing an illumination covariance ``R``, N×N Hermitian PSD in watts.
    """

    matrix: ComplexMatrix = attr.field(converter=_frozen_matrix)

    @classmethod
    def from_beam(cls, beam) -> "CovarianceMatrix":
        """Returns the rank-one covariance ``xx^H``."""
        x = as_vector(beam)
        return cls(np.outer(x, x.conj()))

    @property
    def power(self) -> Watts:
        """The transmit power ``trace(R)``."""
        return float(np.trace(self.matrix).real)


def _gain_matrix(g) -> ComplexMatrix:
    g = np.asarray(g, dtype=complex)
    if g.ndim == 1:
        g = g[None, :]
    return g


def harvested_power(g, covariance, efficiency: float) -> Tuple[RealVector, Watts]:
    """
    Returns the per-receiver powers ``ζ g_m R g_m^H`` and their sum ``ζ trace(G R G^H)``.

    :param g: The power-transfer channel ``G``, shape (M, N).
    :param covariance: The covariance ``R``, a ``CovarianceMatrix`` or array.
    :param efficiency: The conversion efficiency ``ζ``.
    :type efficiency: float
    :raises: NotHermitianError, DimensionMismatch
    :return: ``(per_user, total)`` in watts.
    :rtype: Tuple[RealVector, Watts]
    """
    g = _gain_matrix(g)
    matrix = as_matrix(covariance)
    check_dimensions(matrix.shape, (g.shape[1], g.shape[1]), "covariance")
    if not is_hermitian(matrix, HERMITIAN_TOLERANCE):
        raise NotHermitianError("The covariance matrix is not Hermitian.")

    per_user = efficiency * np.einsum("mi,ij,mj->m", g, matrix, g.conj()).real
    return per_user, float(per_user.sum())


def beam_harvested_power(g, beam, efficiency: float) -> Watts:
    """
    The total harvested power ``ζ ‖Gx‖²`` of a single beam.

    :param g: The power-transfer channel ``G``.
    :param beam: The beam.
    :param efficiency: The conversion efficiency ``ζ``.
    :type efficiency: float
    :rtype: Watts
    """
    g = _gain_matrix(g)
    x = as_vector(beam)
    check_dimensions(x.shape, (g.shape[1],), "beam")
    return efficiency * float(np.sum(np.abs(g @ x) ** 2))


def _dominant_right_vector(g: ComplexMatrix) -> Tuple[float, np.ndarray]:
    if not g.size:
        raise DegenerateInputError("The power-transfer channel is empty.")
    _, singular, vh = linalg.svd(g, full_matrices=False)
    if singular[0] == 0:
        raise DegenerateInputError("The power-transfer channel is zero.")
    return float(singular[0]), vh[0].conj()


def optimal_wpt_beam(g, tx_power: Watts) -> BeamVector:
    """
    The beam maximizing the sum harvested power: ``x* = √P_t · v_1``.

    ``v_1`` is the dominant right singular vector of ``G``. Its global phase is fixed so the
    largest-magnitude entry is real and positive; with a repeated top singular value any
    vector of the top subspace is equally optimal and the decomposition's choice is kept.

    :param g: The power-transfer channel ``G``.
    :param tx_power: The transmit power ``P_t``.
    :type tx_power: Watts
    :raises: DegenerateInputError
    :return: The beam.
    :rtype: BeamVector
    """
    _, vector = _dominant_right_vector(_gain_matrix(g))
    return BeamVector(math.sqrt(tx_power) * fix_phase(vector))


def e_max(g, tx_power: Watts, efficiency: float) -> Watts:
    """
    The power ceiling ``ζ P_t σ_max(G)²``.

    :param g: The power-transfer channel ``G``.
    :param tx_power: The transmit power ``P_t``.
    :type tx_power: Watts
    :param efficiency: The conversion efficiency ``ζ``.
    :type efficiency: float
    :raises: DegenerateInputError
    :return: The largest achievable harvested power.
    :rtype: Watts
    """
    largest, _ = _dominant_right_vector(_gain_matrix(g))
    return efficiency * tx_power * largest**2
