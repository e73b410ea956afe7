from typing import Tuple

import numpy as np
from pydantic import BaseModel, Field

from sscan.constants import DEFAULT_SIGMA, INTENSITY_LEVELS
from sscan.hsi.cube import HsiCube


class NoiseSpec(BaseModel):
    """
    Additive white Gaussian noise.

    Attributes:
        sigma_8bit (float): standard deviation in 8-bit intensity units; the deviation applied to
            a normalized cube is sigma_8bit / 255
        seed (int): seed of the draw
    """
    sigma_8bit: float = Field(default=DEFAULT_SIGMA, ge=0.0)
    seed: int = 0

    @property
    def sigma(self) -> float:
        """Get the standard deviation in the normalized [0, 1] domain."""
        return self.sigma_8bit / INTENSITY_LEVELS


def gaussian_noise(shape: Tuple[int, ...], spec: NoiseSpec) -> np.ndarray:
    """
    Draw N(0, (sigma_8bit/255)²) samples of the given shape from a generator seeded with spec.seed.

    Args:
        shape (Tuple[int, ...]): the shape of the draw
        spec (NoiseSpec): noise level and seed

    Returns:
        np.ndarray: float64 noise
    """
    return np.random.default_rng(spec.seed).standard_normal(shape) * spec.sigma


def add_gaussian_noise(cube: HsiCube, spec: NoiseSpec) -> HsiCube:
    """
    Add i.i.d. N(0, (sigma_8bit/255)²) noise to every voxel of a normalized cube. The result is
    not clipped to [0, 1]. The draw is fully determined by spec.seed.

    Args:
        cube (HsiCube): a normalized cube
        spec (NoiseSpec): noise level and seed

    Returns:
        HsiCube: the noisy cube, float64, same band_scale; an unchanged copy when sigma_8bit is 0
    """
    if spec.sigma_8bit == 0:
        return cube.with_data(cube.data.copy())
    data = cube.data.astype(np.float64)
    return cube.with_data(data + gaussian_noise(data.shape, spec))
