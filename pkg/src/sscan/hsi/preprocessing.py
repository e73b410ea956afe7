import logging
from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, Field

from sscan.constants import DEFAULT_PATCH_SIZE, DEFAULT_PATCHES_PER_EPOCH
from sscan.errors import ShapeError
from sscan.hsi.cube import HsiCube


class PatchSpec(BaseModel):
    """
    Random square training patches.

    Attributes:
        patch_size (int): spatial side of every patch
        count (int): patches drawn per call (per epoch)
        seed (int): seed of the corner draw
    """
    patch_size: int = Field(default=DEFAULT_PATCH_SIZE, ge=1)
    count: int = Field(default=DEFAULT_PATCHES_PER_EPOCH, ge=0)
    seed: int = 0


def normalize(cube: HsiCube) -> HsiCube:
    """
    Min-max scale every band to [0, 1] independently, recording the (min, max) pair of each
    band. A constant band maps to zeros with the recorded scale (min, min + 1), so it stays
    invertible.

    Args:
        cube (HsiCube): a raw cube

    Returns:
        HsiCube: float64 values in [0, 1] with band_scale set
    """
    data = cube.data.astype(np.float64)
    lo = data.min(axis=(1, 2))
    hi = data.max(axis=(1, 2))
    constant = hi == lo
    if constant.any():
        logging.debug(f"{int(constant.sum())} constant band(s) map to zero")
    hi = np.where(constant, lo + 1.0, hi)
    scaled = (data - lo[:, None, None]) / (hi - lo)[:, None, None]
    return HsiCube(scaled, np.stack([lo, hi], axis=1))


def denormalize(cube: HsiCube) -> HsiCube:
    """
    Undo normalize(): v = v' · (max − min) + min per band.

    Args:
        cube (HsiCube): a cube with band_scale

    Returns:
        HsiCube: the cube in its original units, without band_scale
    """
    if cube.band_scale is None:
        raise ValueError("denormalize needs a cube carrying band_scale")
    lo, hi = cube.band_scale[:, 0], cube.band_scale[:, 1]
    return HsiCube(cube.data * (hi - lo)[:, None, None] + lo[:, None, None])


def split_spatial(cube: HsiCube, train_rows: int) -> Tuple[HsiCube, HsiCube]:
    """
    Split a cube by rows: the first `train_rows` rows form the training cube, the remaining rows
    the part the test crop is taken from. Both keep all bands and the band_scale.

    Args:
        cube (HsiCube): the full cube
        train_rows (int): 0 < train_rows < height

    Returns:
        Tuple[HsiCube, HsiCube]: (train, remainder)
    """
    if not 0 < train_rows < cube.height:
        raise ShapeError(f"train_rows must lie in (0, {cube.height}), got {train_rows}")
    return (cube.with_data(cube.data[:, :train_rows, :].copy()),
            cube.with_data(cube.data[:, train_rows:, :].copy()))


def crop(cube: HsiCube, x: int, y: int, h: int, w: int) -> HsiCube:
    """
    Spatial crop of h rows by w columns with top-left corner at column x, row y.

    Args:
        cube (HsiCube): the cube
        x (int): column offset
        y (int): row offset
        h (int): rows
        w (int): columns

    Returns:
        HsiCube: the crop, all bands, same band_scale
    """
    if h < 1 or w < 1 or x < 0 or y < 0 or y + h > cube.height or x + w > cube.width:
        raise ShapeError(f"crop window x={x} y={y} h={h} w={w} does not fit in {cube.height} × {cube.width}")
    return cube.with_data(cube.data[:, y:y + h, x:x + w].copy())


def patch_corners(cube: HsiCube, spec: PatchSpec) -> np.ndarray:
    """
    Draw the top-left corners of `spec.count` patches uniformly over the valid range.

    Returns:
        np.ndarray: count × 2 array of (row, column)
    """
    if spec.patch_size > min(cube.height, cube.width):
        raise ShapeError(f"patch size {spec.patch_size} exceeds cube extent {cube.height} × {cube.width}")
    rng = np.random.default_rng(spec.seed)
    rows = rng.integers(0, cube.height - spec.patch_size + 1, size=spec.count)
    cols = rng.integers(0, cube.width - spec.patch_size + 1, size=spec.count)
    return np.stack([rows, cols], axis=1)


def extract_patches(cube: HsiCube, spec: PatchSpec) -> List[HsiCube]:
    """
    Cut `spec.count` square patches at seeded uniformly random positions.

    Args:
        cube (HsiCube): the source cube
        spec (PatchSpec): size, count and seed

    Returns:
        List[HsiCube]: patch_size × patch_size × bands patches, same band_scale

    :raises ShapeError: If the patch is larger than the cube.
    """
    size = spec.patch_size
    return [cube.with_data(cube.data[:, r:r + size, c:c + size].copy()) for r, c in patch_corners(cube, spec)]
