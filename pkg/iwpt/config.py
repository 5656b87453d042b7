"""
## iwpt.config

A module for loading scenes from TOML files.

Every key is optional; missing keys fall back to the values of :func:`iwpt.scene.paper_scene`.
Powers are given in dBm and converted to watts on load.
"""

import logging
import tomllib
from pathlib import Path
from typing import Any, Mapping, Union

import numpy as np

from iwpt.enums import Preset
from iwpt.errors import SceneConfigError
from iwpt.helpers import dbm_to_watts, noise_power_from_density
from iwpt.scene import (
    SPEED_OF_LIGHT,
    ArrayGeometry,
    ReceiverSet,
    RoiGrid,
    Scene,
    desk_scene,
    paper_scene,
)

__all__ = ["load_scene", "scene_from_dict", "preset_scene"]

logger = logging.getLogger(__name__)

_TOP_LEVEL_KEYS = {
    "frequency_hz",
    "tx_power_dbm",
    "noise_power_dbm",
    "noise_density_dbm_hz",
    "bandwidth_hz",
    "efficiency",
    "pattern_exponent",
    "array",
    "roi",
    "receivers",
}


def preset_scene(preset: Union[Preset, str]) -> Scene:
    """
    Returns a built-in scene by name.

    :param preset: ``paper`` or ``desk``.
    :type preset: Union[Preset, str]
    :raises: SceneConfigError
    :return: The scene.
    :rtype: Scene
    """
    try:
        preset = Preset(preset)
    except ValueError:
        raise SceneConfigError(f"Unknown preset {preset!r}.") from None

    match preset:
        case Preset.PAPER:
            return paper_scene()
        case Preset.DESK:
            return desk_scene()


def _number(table: Mapping[str, Any], key: str, default: float, where: str) -> float:
    value = table.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SceneConfigError(f"{where}{key} must be a number, got {value!r}.")
    return float(value)


def _count(table: Mapping[str, Any], key: str, default: int, where: str) -> int:
    value = table.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise SceneConfigError(f"{where}{key} must be a positive integer, got {value!r}.")
    return value


def _point(table: Mapping[str, Any], key: str, default, where: str) -> np.ndarray:
    value = table.get(key, default)
    try:
        point = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise SceneConfigError(f"{where}{key} must be a 3-vector, got {value!r}.") from None
    if point.shape != (3,):
        raise SceneConfigError(f"{where}{key} must be a 3-vector, got {value!r}.")
    return point


def _table(data: Mapping[str, Any], key: str) -> Mapping[str, Any]:
    table = data.get(key, {})
    if not isinstance(table, Mapping):
        raise SceneConfigError(f"[{key}] must be a table.")
    return table


def scene_from_dict(data: Mapping[str, Any]) -> Scene:
    """
    Builds a scene from parsed configuration data.

    :param data: The parsed TOML document.
    :type data: Mapping[str, Any]
    :raises: SceneConfigError
    :return: The scene.
    :rtype: Scene
    """
    unknown = set(data) - _TOP_LEVEL_KEYS
    if unknown:
        raise SceneConfigError(f"Unknown configuration keys: {', '.join(sorted(unknown))}.")

    base = paper_scene()

    frequency = _number(data, "frequency_hz", base.frequency, "")
    if frequency <= 0:
        raise SceneConfigError("frequency_hz must be positive.")
    wavelength = SPEED_OF_LIGHT / frequency

    tx_power = (
        dbm_to_watts(_number(data, "tx_power_dbm", 0.0, ""))
        if "tx_power_dbm" in data
        else base.tx_power
    )

    if "noise_power_dbm" in data:
        if "noise_density_dbm_hz" in data:
            raise SceneConfigError(
                "Give either noise_power_dbm or noise_density_dbm_hz, not both."
            )
        noise_power = dbm_to_watts(_number(data, "noise_power_dbm", 0.0, ""))
    elif "noise_density_dbm_hz" in data or "bandwidth_hz" in data:
        density = _number(data, "noise_density_dbm_hz", -170.0, "")
        bandwidth = _number(data, "bandwidth_hz", 120e3, "")
        if bandwidth <= 0:
            raise SceneConfigError("bandwidth_hz must be positive.")
        noise_power = noise_power_from_density(density, bandwidth)
    else:
        noise_power = base.noise_power

    array_table = _table(data, "array")
    if "spacing_m" in array_table and "spacing_wavelengths" in array_table:
        raise SceneConfigError("Give either array.spacing_m or array.spacing_wavelengths.")
    if "spacing_m" in array_table:
        spacing = _number(array_table, "spacing_m", 0.0, "array.")
    else:
        spacing = _number(array_table, "spacing_wavelengths", 1.5, "array.") * wavelength

    roi_table = _table(data, "roi")
    receiver_table = _table(data, "receivers")
    positions = receiver_table.get("positions", base.receivers.positions.tolist())
    try:
        positions = np.array(positions, dtype=float).reshape(-1, 3)
    except (TypeError, ValueError):
        raise SceneConfigError(
            "receivers.positions must be a list of 3-vectors."
        ) from None

    try:
        return Scene(
            array=ArrayGeometry(
                rows=_count(array_table, "rows", base.array.rows, "array."),
                cols=_count(array_table, "cols", base.array.cols, "array."),
                spacing=spacing,
                reference=_point(array_table, "reference", base.array.reference, "array."),
                normal=_point(array_table, "normal", base.array.normal, "array."),
            ),
            roi=RoiGrid(
                rows=_count(roi_table, "rows", base.roi.rows, "roi."),
                cols=_count(roi_table, "cols", base.roi.cols, "roi."),
                cell_size=_number(roi_table, "cell_size", base.roi.cell_size, "roi."),
                center=_point(roi_table, "center", base.roi.center, "roi."),
                normal=_point(roi_table, "normal", base.roi.normal, "roi."),
            ),
            receivers=ReceiverSet(positions=positions),
            frequency=frequency,
            tx_power=tx_power,
            noise_power=noise_power,
            efficiency=_number(data, "efficiency", base.efficiency, ""),
            pattern_exponent=_number(data, "pattern_exponent", base.pattern_exponent, ""),
        )
    except ValueError as error:
        raise SceneConfigError(str(error)) from error


def load_scene(path: Union[str, Path]) -> Scene:
    """
    Loads a scene from a TOML file.

    :param path: The file to read.
    :type path: Union[str, Path]
    :raises: SceneConfigError
    :return: The scene.
    :rtype: Scene
    """
    path = Path(path)
    try:
        with path.open("rb") as file:
            data = tomllib.load(file)
    except FileNotFoundError:
        raise SceneConfigError(f"Scene file {path} does not exist.") from None
    except tomllib.TOMLDecodeError as error:
        raise SceneConfigError(f"Scene file {path} is not valid TOML: {error}") from error

    logger.info("Loaded scene from %s", path)
    return scene_from_dict(data)
