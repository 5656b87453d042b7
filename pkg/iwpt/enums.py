"""
# iwpt.enums

A module containing all enumerations of various things.
"""

from enum import StrEnum

__all__ = ["Architecture", "SolveStatus", "Preset"]


class Architecture(StrEnum):
    """
    An enum representing the way an illumination beam is produced.

    ``DIGITAL`` and ``HYBRID`` are swept over power thresholds, the others are baselines.
    """

    DIGITAL = "digital"
    HYBRID = "hybrid"
    RANDOM = "random"
    IMAGING_ONLY = "imaging"
    WPT_ONLY = "wpt"

    @property
    def is_baseline(self) -> bool:
        """If the architecture is a fixed reference beam rather than a swept design."""
        return self not in (Architecture.DIGITAL, Architecture.HYBRID)


class SolveStatus(StrEnum):
    """
    An enum representing how the SCA loop of the digital design stopped.
    """

    RANK_ONE = "rank-one"
    STALLED = "stalled"
    ITERATION_LIMIT = "iteration-limit"
    SATURATED = "saturated"


class Preset(StrEnum):
    """
    An enum representing the built-in scenes.
    """

    PAPER = "paper"
    DESK = "desk"
