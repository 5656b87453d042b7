"""Scenes and random draws shared by the test modules."""

import numpy as np

from iwpt.scene import SPEED_OF_LIGHT, ArrayGeometry, ReceiverSet, RoiGrid, Scene

FREQUENCY = 28e9
WAVELENGTH = SPEED_OF_LIGHT / FREQUENCY
DESK_FRACTIONS = (0.0, 0.25, 0.5, 0.75, 1.0)


def make_scene(
    rows=3,
    cols=3,
    roi_rows=2,
    roi_cols=2,
    cell_size=0.02,
    center=(0.15, 0.0, 0.0),
    receivers=((0.12, 0.05, 0.03), (0.1, -0.06, 0.0)),
    noise_power=1e-15,
    tx_power=1.0,
    efficiency=0.5,
    pattern_exponent=1.0,
):
    """A scene with the array at the origin facing +x and 3λ/2 spacing."""
    return Scene(
        array=ArrayGeometry(rows=rows, cols=cols, spacing=1.5 * WAVELENGTH),
        roi=RoiGrid(rows=roi_rows, cols=roi_cols, cell_size=cell_size, center=center),
        receivers=ReceiverSet(positions=receivers),
        frequency=FREQUENCY,
        tx_power=tx_power,
        noise_power=noise_power,
        efficiency=efficiency,
        pattern_exponent=pattern_exponent,
    )


def close_scene(**overrides):
    """A 4×4 array imaging a 2×2 ROI at 15 cm: more antennas than cells."""
    settings = dict(
        rows=4,
        cols=4,
        cell_size=0.03,
        receivers=((0.2, 0.1, 0.05), (0.25, -0.1, 0.0)),
    )
    settings.update(overrides)
    return make_scene(**settings)


def random_beam(rng, size, power=1.0):
    """A complex Gaussian beam scaled to the given power."""
    x = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return x * np.sqrt(power) / np.linalg.norm(x)


def random_psd(rng, size, rank=None, power=1.0):
    """A random Hermitian PSD matrix with the given rank and trace."""
    rank = rank or size
    factor = rng.standard_normal((size, rank)) + 1j * rng.standard_normal((size, rank))
    matrix = factor @ factor.conj().T
    return matrix * power / np.trace(matrix).real
