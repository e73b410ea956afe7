"""
Image exports: absolute-error maps as binary graymaps (PGM, P5) and false-colour composites as
binary pixmaps (PPM, P6).
"""
import logging
from typing import Optional, Sequence, Tuple

import numpy as np

from sscan.constants import DEFAULT_BAND_TRIPLE
from sscan.errors import ConfigError
from sscan.hsi.cube import HsiCube
from sscan.metrics.quality import paired_arrays


def _check_bands(cube: HsiCube, bands: Sequence[int]) -> Tuple[int, ...]:
    bands = tuple(int(b) for b in bands)
    if len(bands) != 3:
        raise ConfigError("bands", f"expected a band triple, got {bands}")
    for band in bands:
        if not 0 <= band < cube.bands:
            raise ConfigError("bands", f"band {band} is out of range for a cube with {cube.bands} bands")
    return bands


def error_map(ref: HsiCube, test: HsiCube, bands: Sequence[int] = DEFAULT_BAND_TRIPLE) -> np.ndarray:
    """
    Per-pixel absolute error averaged over three bands.

    Args:
        ref (HsiCube): the clean cube
        test (HsiCube): the cube under evaluation
        bands (Sequence[int]): the three band indices

    Returns:
        np.ndarray: H×W errors
    """
    r, t = paired_arrays(ref, test)
    selected = list(_check_bands(ref, bands))
    return np.abs(r[selected] - t[selected]).mean(axis=0)


def encode_pgm(errors: np.ndarray, max_error: Optional[float] = None) -> Tuple[bytes, float]:
    """
    Scale errors linearly so that `max_error` maps to white and encode them as a P5 graymap.
    The anchor is recorded in a `# max_error=` comment line.

    Args:
        errors (np.ndarray): H×W non-negative values
        max_error (Optional[float]): the white level, the largest error if None

    Returns:
        Tuple[bytes, float]: the file contents and the anchor used
    """
    anchor = float(errors.max()) if max_error is None else float(max_error)
    if anchor > 0:
        pixels = np.clip(np.rint(errors / anchor * 255.0), 0, 255).astype(np.uint8)
    else:
        pixels = np.zeros(errors.shape, dtype=np.uint8)
    height, width = errors.shape
    header = f"P5\n# max_error={anchor:.8g}\n{width} {height}\n255\n".encode("ascii")
    return header + pixels.tobytes(), anchor


def write_error_map(ref: HsiCube, test: HsiCube, path: str, bands: Sequence[int] = DEFAULT_BAND_TRIPLE,
                    max_error: Optional[float] = None) -> float:
    """
    Write the three-band absolute-error map of a pair as a PGM file.

    Returns:
        float: the error mapped to white
    """
    raw, anchor = encode_pgm(error_map(ref, test, bands), max_error)
    with open(path, "wb") as stream:
        stream.write(raw)
    logging.info(f"wrote error map {path} (white = {anchor:.6g})")
    return anchor


def stretch(channel: np.ndarray, low: float = 2.0, high: float = 98.0) -> np.ndarray:
    """Linear stretch of the low..high percentile range to [0, 1], clipped."""
    lo, hi = np.percentile(channel, [low, high])
    if hi <= lo:
        return np.zeros(channel.shape, dtype=np.float64)
    return np.clip((channel - lo) / (hi - lo), 0.0, 1.0)


def false_color(cube: HsiCube, bands: Sequence[int] = DEFAULT_BAND_TRIPLE) -> np.ndarray:
    """
    An RGB composite of three bands, each stretched between its 2nd and 98th percentile.

    Returns:
        np.ndarray: H×W×3 uint8 image
    """
    selected = _check_bands(cube, bands)
    rgb = np.stack([stretch(cube.data[b].astype(np.float64)) for b in selected], axis=-1)
    return np.rint(rgb * 255.0).astype(np.uint8)


def write_false_color(cube: HsiCube, path: str, bands: Sequence[int] = DEFAULT_BAND_TRIPLE):
    """Write a false-colour composite as a P6 pixmap."""
    rgb = false_color(cube, bands)
    header = f"P6\n# bands={','.join(str(b) for b in bands)}\n{cube.width} {cube.height}\n255\n".encode("ascii")
    with open(path, "wb") as stream:
        stream.write(header + rgb.tobytes())
    logging.info(f"wrote false-colour composite {path} from bands {tuple(bands)}")
