__doc__ = """
# iwpt.helpers

A module containing all helper functions for the module: unit conversion, the scene check
decorator and the async file writers used for every result file.

You typically don't want to use this module directly.
"""

import csv
import io
import logging
import math
from functools import wraps
from pathlib import Path
from typing import Iterable, Sequence, Union

import aiofiles
import numpy as np

from .errors import InvalidSceneError

__all__ = [
    "dbm_to_watts",
    "watts_to_dbm",
    "noise_power_from_density",
    "require_valid_scene",
    "format_number",
    "csv_text",
    "graymap_text",
    "write",
]

logger = logging.getLogger(__name__)


# * Units
def dbm_to_watts(dbm: float) -> float:
    """
    Converts a power in dBm to watts.

    :param dbm: The power in dBm.
    :type dbm: float
    :return: The power in watts.
    :rtype: float
    """
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    """
    Converts a power in watts to dBm. Zero watts maps to ``-inf``.

    :param watts: The power in watts.
    :type watts: float
    :return: The power in dBm.
    :rtype: float
    """
    if watts <= 0:
        return -math.inf
    return 10.0 * math.log10(watts) + 30.0


def noise_power_from_density(density_dbm_hz: float, bandwidth_hz: float) -> float:
    """
    Integrates a noise spectral density over a bandwidth.

    :param density_dbm_hz: The density in dBm/Hz.
    :type density_dbm_hz: float
    :param bandwidth_hz: The bandwidth in Hz.
    :type bandwidth_hz: float
    :return: The noise power in watts.
    :rtype: float
    """
    return dbm_to_watts(density_dbm_hz + 10.0 * math.log10(bandwidth_hz))


# Decorator for functions consuming a Scene
def require_valid_scene(strict: bool = False):
    """
    A decorator for functions whose first argument is a scene.

    The scene is validated before the call. Violations are logged, or raised when
    ``strict`` is set.

    :param strict: Raise instead of warning.
    :type strict: bool
    :return: The decorated function with the scene check.
    """

    def decorator(func):
        @wraps(func)
        def wrapper(scene, *args, **kwargs):
            report = scene.validate()
            if report:
                if strict:
                    raise InvalidSceneError("; ".join(report))
                for issue in report:
                    logger.warning("Scene check: %s", issue)

            return func(scene, *args, **kwargs)

        return wrapper

    return decorator


# * Text formats
def format_number(value: Union[float, int, bool, str]) -> str:
    """
    Formats a value for CSV output.

    Floats use the shortest round-trip representation so repeated runs give identical
    bytes; infinities are written as ``inf``/``-inf`` and NaN as ``nan``.

    :param value: The value to format.
    :return: The formatted value.
    :rtype: str
    """
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """
    Renders rows as comma separated text with a header row.

    :param header: The column names.
    :type header: Sequence[str]
    :param rows: The rows to render.
    :type rows: Iterable[Sequence]
    :return: The CSV text, ``\\n`` line endings.
    :rtype: str
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_number(value) for value in row])
    return buffer.getvalue()


def graymap_text(image: np.ndarray, max_value: int = 255) -> str:
    """
    Renders a non-negative 2-D array as a plain-text portable graymap (P2).

    The image is scaled so its maximum maps to ``max_value``; an all-zero image stays black.

    :param image: The 2-D array of magnitudes.
    :type image: np.ndarray
    :param max_value: The white level of the graymap.
    :type max_value: int
    :return: The P2 text.
    :rtype: str
    """
    image = np.asarray(image, dtype=float)
    if image.ndim != 2:
        raise ValueError("A graymap needs a 2-D image.")

    peak = float(image.max()) if image.size else 0.0
    scaled = np.zeros(image.shape, dtype=int)
    if peak > 0:
        scaled = np.rint(np.clip(image / peak, 0.0, 1.0) * max_value).astype(int)

    rows, cols = image.shape
    lines = ["P2", f"{cols} {rows}", str(max_value)]
    lines.extend(" ".join(str(value) for value in row) for row in scaled)
    return "\n".join(lines) + "\n"


# * File output with aiofiles
async def write(text: str, path: Union[str, Path]) -> Path:
    """
    Helper function to write text to the given path, creating parent directories.

    :param text: The text to be written to the file.
    :type text: str
    :param path: The path to which the text should be written.
    :type path: Union[str, Path]
    :return: The path that was written.
    :rtype: Path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    async with aiofiles.open(path, "w", encoding="utf-8", newline="") as file:
        await file.write(text)

    logger.info("Wrote %s", path)
    return path
