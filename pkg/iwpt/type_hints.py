__doc__ = """
# iwpt.type_hints

A module containing user type hints for the module.
"""

import numpy as np
from numpy.typing import NDArray

Meters = float
"""Type hint for a length in meters."""

Hertz = float
"""Type hint for a frequency in Hz."""

Watts = float
"""Type hint for a power in watts."""

Radians = float
"""Type hint for an angle in radians."""

Seed = int
"""Type hint for the seed of a random generator."""

Points = NDArray[np.float64]
"""Type hint for an array of 3-D positions with shape (count, 3)."""

RealVector = NDArray[np.float64]
"""Type hint for a real vector."""

ComplexVector = NDArray[np.complex128]
"""Type hint for a complex vector."""

ComplexMatrix = NDArray[np.complex128]
"""Type hint for a complex matrix."""

BinaryMask = NDArray[np.bool_]
"""Type hint for a 2-D occupancy mask of the ROI."""
