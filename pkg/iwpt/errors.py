__doc__ = """
# iwpt.errors

A module containing all exceptions and error-related functions.
"""

from typing import Sequence

__all__ = [
    "IwptError",
    "DimensionMismatch",
    "ChannelError",
    "DegenerateInputError",
    "NotHermitianError",
    "InfeasibleThresholdError",
    "SolverError",
    "SceneConfigError",
    "InvalidSceneError",
    "check_dimensions",
]


class IwptError(Exception):
    """Base class of every error raised by the package."""


class DimensionMismatch(IwptError):
    """Raised when array shapes do not agree."""


class ChannelError(IwptError):
    """Raised when a channel entry cannot be synthesized (zero distance)."""


class DegenerateInputError(IwptError):
    """Raised when a zero matrix or vector is given where a direction is needed."""


class NotHermitianError(IwptError):
    """Raised when a covariance matrix is not Hermitian."""


class InfeasibleThresholdError(IwptError):
    """Raised when a power threshold lies outside [0, E_max]."""


class SolverError(IwptError):
    """
    Raised when the conic backend fails.

    The partial diagnostics of the solve, if any, are attached as ``diagnostics``.
    """

    def __init__(self, message: str, diagnostics=None) -> None:
        super().__init__(message)
        self.diagnostics = diagnostics


class SceneConfigError(IwptError):
    """Raised when a scene configuration file is malformed."""


class InvalidSceneError(IwptError):
    """Raised when a scene violates its invariants and strict checking is on."""


def check_dimensions(
    actual: Sequence[int],
    expected: Sequence[int],
    what: str,
) -> None:
    """
    Checks that a shape matches the expected one.

    :param actual: The shape that was received.
    :type actual: Sequence[int]
    :param expected: The shape that was expected.
    :type expected: Sequence[int]
    :param what: Name of the checked quantity, used in the error message.
    :type what: str
    :raises: DimensionMismatch
    :return: None
    :rtype: None
    """
    if tuple(actual) != tuple(expected):
        raise DimensionMismatch(
            f"{what} has shape {tuple(actual)}, expected {tuple(expected)}"
        )
