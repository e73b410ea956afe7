from typing import Optional

import numpy as np

from sscan.errors import ShapeError


class HsiCube:
    """
    A hyperspectral cube of height × width × bands reflectance values, stored band-sequential
    (a bands × height × width array: band-major, then row-major).

    `band_scale`, when present, holds the per-band (min, max) pairs recorded by normalize()
    and is what denormalize() inverts.
    """

    def __init__(self, data: np.ndarray, band_scale: Optional[np.ndarray] = None):
        '''Initialize the cube.

        Args:
            data (np.ndarray): bands × height × width values
            band_scale (Optional[np.ndarray]): bands × 2 array of (min, max) pairs
        '''
        data = np.asarray(data)
        if data.ndim != 3 or min(data.shape) < 1:
            raise ShapeError(f"a cube needs positive bands × height × width extents, got shape {data.shape}")
        if not np.issubdtype(data.dtype, np.floating):
            data = data.astype(np.float64)
        self._data = np.ascontiguousarray(data)
        if band_scale is not None:
            band_scale = np.asarray(band_scale, dtype=np.float64)
            if band_scale.shape != (data.shape[0], 2):
                raise ShapeError(f"band_scale must be {data.shape[0]} × 2, got shape {band_scale.shape}")
        self._band_scale = band_scale

    @classmethod
    def from_hwb(cls, array: np.ndarray, band_scale: Optional[np.ndarray] = None) -> "HsiCube":
        """Build a cube from a height × width × bands array."""
        array = np.asarray(array)
        if array.ndim != 3:
            raise ShapeError(f"expected a height × width × bands array, got shape {array.shape}")
        return cls(np.transpose(array, (2, 0, 1)), band_scale)

    def __repr__(self):
        return (f"{self.__class__.__name__}(height={self.height}, width={self.width}, bands={self.bands}, "
                f"dtype={self.data.dtype}, normalized={self.band_scale is not None})")

    @property
    def data(self) -> np.ndarray:
        """Get the band-sequential values, bands × height × width."""
        return self._data

    @property
    def height(self) -> int:
        return self._data.shape[1]

    @property
    def width(self) -> int:
        return self._data.shape[2]

    @property
    def bands(self) -> int:
        return self._data.shape[0]

    @property
    def shape(self) -> tuple:
        """Get (height, width, bands)."""
        return self.height, self.width, self.bands

    @property
    def band_scale(self) -> Optional[np.ndarray]:
        """Get the per-band (min, max) pairs recorded by normalization, None for raw cubes."""
        return self._band_scale

    def to_hwb(self) -> np.ndarray:
        """Return the values as a height × width × bands array."""
        return np.transpose(self._data, (1, 2, 0))

    def with_data(self, data: np.ndarray) -> "HsiCube":
        """A cube with new values and the same band_scale."""
        return HsiCube(data, self._band_scale)
