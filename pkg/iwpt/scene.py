"""
## iwpt.scene

A module containing the experiment geometry and physical constants.

Every other module consumes a :class:`Scene`. Scenes and scattering fields are frozen after
construction and can be shared between concurrent tasks.
"""

import logging
from typing import List, Optional

import attr
import numpy as np

from iwpt.errors import check_dimensions
from iwpt.helpers import dbm_to_watts, noise_power_from_density
from iwpt.type_hints import BinaryMask, ComplexVector, Hertz, Meters, Points, Watts

__all__ = [
    "SPEED_OF_LIGHT",
    "ArrayGeometry",
    "RoiGrid",
    "ReceiverSet",
    "Scene",
    "ScatteringField",
    "paper_scene",
    "desk_scene",
    "scene_validate",
    "scattering_from_bitmap",
    "standard_pattern",
]

logger = logging.getLogger(__name__)

SPEED_OF_LIGHT = 299792458.0
"""Speed of light in m/s."""

# Smallest separation treated as two distinct points.
COINCIDENCE_DISTANCE: Meters = 1e-9

# The shipped test glyph: a ring with a bar through it.
STANDARD_GLYPH: BinaryMask = np.array(
    [
        [0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 1, 1, 1, 1, 0, 0, 0],
        [0, 0, 1, 0, 0, 0, 0, 1, 0, 0],
        [0, 1, 0, 0, 0, 0, 0, 0, 1, 0],
        [0, 1, 0, 1, 1, 1, 1, 0, 1, 0],
        [0, 1, 0, 1, 1, 1, 1, 0, 1, 0],
        [0, 1, 0, 0, 0, 0, 0, 0, 1, 0],
        [0, 0, 1, 0, 0, 0, 0, 1, 0, 0],
        [0, 0, 0, 1, 1, 1, 1, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    ],
    dtype=bool,
)


def _vector3(value) -> np.ndarray:
    array = np.array(value, dtype=float).reshape(3)
    array.setflags(write=False)
    return array


def _unit3(value) -> np.ndarray:
    array = np.array(value, dtype=float).reshape(3)
    norm = np.linalg.norm(array)
    if norm == 0:
        raise ValueError("A plane normal cannot be the zero vector.")
    array = array / norm
    array.setflags(write=False)
    return array


def _points(value) -> Points:
    array = np.array(value, dtype=float).reshape(-1, 3)
    array.setflags(write=False)
    return array


def _complex_vector(value) -> ComplexVector:
    array = np.array(value, dtype=complex).reshape(-1)
    array.setflags(write=False)
    return array


def _plane_axes(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # For a normal along +x this gives columns along +y and rows along +z.
    helper = np.array([0.0, 0.0, 1.0])
    if abs(float(normal @ helper)) > 0.9:
        helper = np.array([1.0, 0.0, 0.0])
    col_axis = np.cross(helper, normal)
    col_axis /= np.linalg.norm(col_axis)
    row_axis = np.cross(normal, col_axis)
    return col_axis, row_axis


def _lattice(
    rows: int,
    cols: int,
    pitch: float,
    center: np.ndarray,
    normal: np.ndarray,
) -> Points:
    col_axis, row_axis = _plane_axes(normal)
    row_offsets = (np.arange(rows) - (rows - 1) / 2.0) * pitch
    col_offsets = (np.arange(cols) - (cols - 1) / 2.0) * pitch
    # Row-major: index = row * cols + col.
    points = (
        center[None, None, :]
        + row_offsets[:, None, None] * row_axis[None, None, :]
        + col_offsets[None, :, None] * col_axis[None, None, :]
    )
    points = points.reshape(rows * cols, 3)
    points.setflags(write=False)
    return points


def _positive_count(instance, attribute, value) -> None:
    if value < 1:
        raise ValueError(f"{attribute.name} must be at least 1, got {value}.")


@attr.define(slots=True, frozen=True, eq=False)
class ArrayGeometry:
    """
    A class representing the colocated planar TX/RX array.

    Row ``i`` of the lattice is driven by RF chain ``i`` in the hybrid architecture, so
    antenna ``n = i * cols + l``.

    Attributes
    ----------
    rows : int
        The number of antenna rows ``N_d``.
    cols : int
        The number of antenna columns ``N_e``.
    spacing : Meters
        The element spacing.
    reference : np.ndarray
        The lattice centre.
    normal : np.ndarray
        The unit normal of the array plane (boresight).
    """

    rows: int = attr.field(validator=_positive_count)
    """The number of antenna rows ``N_d``."""
    cols: int = attr.field(validator=_positive_count)
    """The number of antenna columns ``N_e``."""
    spacing: Meters = attr.field(converter=float)
    """The element spacing in meters."""
    reference: np.ndarray = attr.field(factory=lambda: (0.0, 0.0, 0.0), converter=_vector3)
    """The lattice centre."""
    normal: np.ndarray = attr.field(factory=lambda: (1.0, 0.0, 0.0), converter=_unit3)
    """The unit normal of the array plane."""

    @spacing.validator
    def _check_spacing(self, attribute, value) -> None:
        if value <= 0:
            raise ValueError("The element spacing must be positive.")

    @property
    def size(self) -> int:
        """The number of antennas ``N = N_d · N_e``."""
        return self.rows * self.cols

    @property
    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        """The in-plane unit vectors along columns and along rows."""
        return _plane_axes(self.normal)

    @property
    def positions(self) -> Points:
        """The antenna positions ``a_n`` with shape (N, 3)."""
        return _lattice(self.rows, self.cols, self.spacing, self.reference, self.normal)

    @property
    def diameter(self) -> Meters:
        """The longest edge of the element lattice."""
        return (max(self.rows, self.cols) - 1) * self.spacing


@attr.define(slots=True, frozen=True, eq=False)
class RoiGrid:
    """
    A class representing the planar region of interest divided into square cells.

    Attributes
    ----------
    rows : int
        The number of cell rows.
    cols : int
        The number of cell columns.
    cell_size : Meters
        The cell side ``Δ``, which is also the grid pitch.
    center : np.ndarray
        The centre of the grid.
    normal : np.ndarray
        The unit normal of the ROI plane.
    """

    rows: int = attr.field(validator=_positive_count)
    cols: int = attr.field(validator=_positive_count)
    cell_size: Meters = attr.field(converter=float)
    center: np.ndarray = attr.field(converter=_vector3)
    normal: np.ndarray = attr.field(factory=lambda: (1.0, 0.0, 0.0), converter=_unit3)

    @cell_size.validator
    def _check_cell_size(self, attribute, value) -> None:
        if value <= 0:
            raise ValueError("The cell size must be positive.")

    @property
    def size(self) -> int:
        """The number of cells ``K``."""
        return self.rows * self.cols

    @property
    def shape(self) -> tuple[int, int]:
        """The side counts ``(rows, cols)``."""
        return self.rows, self.cols

    @property
    def cell_centers(self) -> Points:
        """The cell centres ``r_k`` with shape (K, 3)."""
        return _lattice(self.rows, self.cols, self.cell_size, self.center, self.normal)


@attr.define(slots=True, frozen=True, eq=False)
class ReceiverSet:
    """
    A class representing the energy receivers.

    Attributes
    ----------
    positions : Points
        The receiver positions ``p_m`` with shape (M, 3); M may be 0.
    """

    positions: Points = attr.field(factory=lambda: np.zeros((0, 3)), converter=_points)

    @property
    def size(self) -> int:
        """The number of receivers ``M``."""
        return self.positions.shape[0]


@attr.define(slots=True, frozen=True, eq=False)
class Scene:
    """
    A class representing a complete experiment: geometry plus physical constants.

    Powers are stored in watts; dBm only appears at the configuration boundary.

    Attributes
    ----------
    array : ArrayGeometry
        The colocated TX/RX array.
    roi : RoiGrid
        The region of interest.
    receivers : ReceiverSet
        The energy receivers.
    frequency : Hertz
        The carrier frequency ``f_c``.
    tx_power : Watts
        The transmit power budget ``P_t``.
    noise_power : Watts
        The receiver noise power ``σ²``.
    efficiency : float
        The energy conversion efficiency ``ζ``.
    pattern_exponent : float
        The element-pattern exponent ``q`` of ``F(θ) = cos^q θ``.
    """

    array: ArrayGeometry
    roi: RoiGrid
    receivers: ReceiverSet = attr.field(factory=ReceiverSet)
    frequency: Hertz = attr.field(default=28e9, converter=float)
    tx_power: Watts = attr.field(default=1.0, converter=float)
    noise_power: Watts = attr.field(
        default=noise_power_from_density(-170.0, 120e3), converter=float
    )
    efficiency: float = attr.field(default=0.5, converter=float)
    pattern_exponent: float = attr.field(default=1.0, converter=float)

    @property
    def wavelength(self) -> Meters:
        """The wavelength ``λ = c / f_c``."""
        return SPEED_OF_LIGHT / self.frequency

    @property
    def far_field_distance(self) -> Meters:
        """The Rayleigh distance ``2D²/λ`` bounding the radiating near field."""
        return 2.0 * self.array.diameter**2 / self.wavelength

    def with_array(self, rows: Optional[int] = None, cols: Optional[int] = None) -> "Scene":
        """
        Returns a copy of the scene with a resized array, spacing and placement kept.

        :param rows: The new number of rows, unchanged if None.
        :type rows: Optional[int]
        :param cols: The new number of columns, unchanged if None.
        :type cols: Optional[int]
        :return: The resized scene.
        :rtype: Scene
        """
        array = attr.evolve(
            self.array,
            rows=self.array.rows if rows is None else rows,
            cols=self.array.cols if cols is None else cols,
        )
        return attr.evolve(self, array=array)

    def validate(self) -> List[str]:
        """
        Lists every violated scene invariant. An empty list means the scene is valid.

        :return: Human-readable descriptions of the violations.
        :rtype: List[str]
        """
        report: List[str] = []

        if self.frequency <= 0:
            report.append("carrier frequency must be positive")
        if self.tx_power <= 0:
            report.append("transmit power must be positive")
        if self.noise_power <= 0:
            report.append("noise power must be positive")
        if not 0.0 < self.efficiency < 1.0:
            report.append("efficiency out of range (0, 1)")
        if self.pattern_exponent < 0:
            report.append("pattern exponent must be nonnegative")

        antennas = self.array.positions
        if antennas.shape[0] > 1:
            gaps = np.linalg.norm(antennas[:, None, :] - antennas[None, :, :], axis=-1)
            np.fill_diagonal(gaps, np.inf)
            if gaps.min() < COINCIDENCE_DISTANCE:
                report.append("antenna positions are not distinct")

        receivers = self.receivers.positions
        for index, point in enumerate(receivers):
            if np.linalg.norm(antennas - point, axis=1).min() < COINCIDENCE_DISTANCE:
                report.append(f"receiver coincides with antenna (receiver {index})")

        for index, point in enumerate(self.roi.cell_centers):
            if np.linalg.norm(antennas - point, axis=1).min() < COINCIDENCE_DISTANCE:
                report.append(f"ROI cell coincides with antenna (cell {index})")

        if self.frequency > 0:
            limit = self.far_field_distance
            reference = self.array.reference
            cell_distance = np.linalg.norm(self.roi.cell_centers - reference, axis=1)
            for index in np.flatnonzero(cell_distance >= limit):
                report.append(
                    f"ROI cell {index} outside radiating near field "
                    f"({cell_distance[index]:.3f} m >= {limit:.3f} m)"
                )
            receiver_distance = np.linalg.norm(receivers - reference, axis=1)
            for index in np.flatnonzero(receiver_distance >= limit):
                report.append(
                    f"receiver {index} outside radiating near field "
                    f"({receiver_distance[index]:.3f} m >= {limit:.3f} m)"
                )

        return report


@attr.define(slots=True, frozen=True, eq=False)
class ScatteringField:
    """
    A class representing the per-cell scattering coefficients of the ROI.

    Attributes
    ----------
    gamma : ComplexVector
        The coefficients ``γ_k``, zero for empty cells.
    cell_size : Meters
        The cell side ``Δ`` bounding ``|γ_k|``.
    """

    gamma: ComplexVector = attr.field(converter=_complex_vector)
    cell_size: Meters = attr.field(converter=float)

    def __attrs_post_init__(self) -> None:
        # A relative slack absorbs Δ's own rounding.
        if self.gamma.size and np.abs(self.gamma).max() > self.cell_size * (1 + 1e-12):
            raise ValueError("Scattering magnitude exceeds the cell size bound |γ| ≤ Δ.")

    @property
    def support(self) -> np.ndarray:
        """The indices of occupied cells."""
        return np.flatnonzero(self.gamma)


def scene_validate(scene: Scene) -> List[str]:
    """
    Lists every violated invariant of a scene (near-field bound, positive powers,
    efficiency range, distinct positions). An empty report means the scene is valid.

    :param scene: The scene to check.
    :type scene: Scene
    :return: The validation report.
    :rtype: List[str]
    """
    return scene.validate()


def paper_scene() -> Scene:
    """
    The reference configuration: 13×13 array on the YZ-plane at the origin with 3λ/2
    spacing, a 10×10 ROI of 0.1 m cells centred at (2, 0, 0) m, three receivers, 28 GHz,
    30 dBm transmit power, ζ = 0.5 and -170 dBm/Hz noise over 120 kHz.

    :return: The reference scene.
    :rtype: Scene
    """
    frequency = 28e9
    wavelength = SPEED_OF_LIGHT / frequency
    return Scene(
        array=ArrayGeometry(rows=13, cols=13, spacing=1.5 * wavelength),
        roi=RoiGrid(rows=10, cols=10, cell_size=0.1, center=(2.0, 0.0, 0.0)),
        receivers=ReceiverSet(
            positions=[(1.5, 1.0, 1.0), (1.0, -1.5, 0.0), (1.5, -1.0, 0.0)]
        ),
        frequency=frequency,
        tx_power=dbm_to_watts(30.0),
        noise_power=noise_power_from_density(-170.0, 120e3),
        efficiency=0.5,
        pattern_exponent=1.0,
    )


def desk_scene() -> Scene:
    """
    A desk-scale scene: 6×6 array, 4×4 ROI of 5 cm cells at 0.5 m and the three
    receivers pulled in by a factor of four, all inside the 1.2 m near field.

    :return: The desk scene.
    :rtype: Scene
    """
    frequency = 28e9
    wavelength = SPEED_OF_LIGHT / frequency
    return Scene(
        array=ArrayGeometry(rows=6, cols=6, spacing=1.5 * wavelength),
        roi=RoiGrid(rows=4, cols=4, cell_size=0.05, center=(0.5, 0.0, 0.0)),
        receivers=ReceiverSet(
            positions=[(0.375, 0.25, 0.25), (0.25, -0.375, 0.0), (0.375, -0.25, 0.0)]
        ),
        frequency=frequency,
        tx_power=dbm_to_watts(30.0),
        noise_power=noise_power_from_density(-170.0, 120e3),
        efficiency=0.5,
        pattern_exponent=1.0,
    )


def scattering_from_bitmap(mask: BinaryMask, roi: RoiGrid) -> ScatteringField:
    """
    Converts an occupancy mask into a scattering field with ``γ_k = Δ`` on set cells.

    :param mask: A 2-D mask with the ROI's side counts.
    :type mask: BinaryMask
    :param roi: The ROI the mask covers.
    :type roi: RoiGrid
    :raises: DimensionMismatch
    :return: The scattering field.
    :rtype: ScatteringField
    """
    mask = np.asarray(mask).astype(bool)
    check_dimensions(mask.shape, roi.shape, "scattering mask")
    gamma = np.where(mask.reshape(-1), roi.cell_size, 0.0).astype(complex)
    return ScatteringField(gamma=gamma, cell_size=roi.cell_size)


def standard_pattern(rows: int = 10, cols: int = 10) -> BinaryMask:
    """
    The shipped test glyph, nearest-neighbour resampled to ``rows × cols``.

    :param rows: The number of mask rows.
    :type rows: int
    :param cols: The number of mask columns.
    :type cols: int
    :return: The binary mask.
    :rtype: BinaryMask
    """
    source_rows, source_cols = STANDARD_GLYPH.shape
    row_index = np.minimum(
        ((np.arange(rows) + 0.5) * source_rows / rows).astype(int), source_rows - 1
    )
    col_index = np.minimum(
        ((np.arange(cols) + 0.5) * source_cols / cols).astype(int), source_cols - 1
    )
    return STANDARD_GLYPH[np.ix_(row_index, col_index)].copy()
