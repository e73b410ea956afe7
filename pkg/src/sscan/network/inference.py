import logging
from typing import Callable, List, Tuple

import numpy as np
from tqdm import tqdm

from sscan.autodiff import Tensor, no_grad
from sscan.constants import DEFAULT_MARGIN, DEFAULT_TILE
from sscan.errors import BandMismatchError, ConfigError
from sscan.hsi.cube import HsiCube
from sscan.network.model import SSCANModel

# (window start, window stop, kept start, kept stop) along one axis
Window = Tuple[int, int, int, int]


def tile_windows(length: int, tile: int, margin: int) -> List[Window]:
    """
    Windows of `tile` samples covering [0, length). Consecutive windows advance by
    tile − 2·margin and the last one is anchored at the end. Of every window only the part at
    least `margin` away from an interior window edge is kept; the kept parts tile [0, length)
    without gaps.

    Args:
        length (int): the extent to cover
        tile (int): window size
        margin (int): context discarded on each interior side

    Returns:
        List[Window]: the windows in increasing order
    """
    if tile <= 2 * margin:
        raise ConfigError("tile", f"tile {tile} must exceed twice the margin {margin}")
    if length <= tile:
        return [(0, length, 0, length)]
    step = tile - 2 * margin
    starts = list(range(0, length - tile, step)) + [length - tile]
    windows = []
    for start in starts:
        stop = start + tile
        keep_start = start + margin if start > 0 else 0
        keep_stop = stop - margin if stop < length else length
        windows.append((start, stop, keep_start, keep_stop))
    return windows


def tile_apply(fn: Callable[[np.ndarray], np.ndarray], array: np.ndarray, tile: int = DEFAULT_TILE,
               margin: int = DEFAULT_MARGIN, progress: bool = False) -> np.ndarray:
    """
    Apply a shape-preserving operator to a channels × height × width array tile by tile and
    stitch the centre crops. The result equals fn(array) for any local operator whose receptive
    radius does not exceed `margin`.

    Args:
        fn (Callable[[np.ndarray], np.ndarray]): maps C×h×w to C×h×w
        array (np.ndarray): C×H×W input
        tile (int): spatial tile side
        margin (int): overlap context kept around each tile
        progress (bool): show a progress bar over the tiles

    Returns:
        np.ndarray: C×H×W output
    """
    _, height, width = array.shape
    rows = tile_windows(height, tile, margin)
    cols = tile_windows(width, tile, margin)
    if len(rows) == 1 and len(cols) == 1:
        return fn(array)

    out = None
    with tqdm(total=len(rows) * len(cols), desc="tiles", disable=not progress) as bar:
        for r0, r1, rk0, rk1 in rows:
            for c0, c1, ck0, ck1 in cols:
                result = fn(array[:, r0:r1, c0:c1])
                if out is None:
                    out = np.empty((result.shape[0], height, width), dtype=result.dtype)
                out[:, rk0:rk1, ck0:ck1] = result[:, rk0 - r0:rk1 - r0, ck0 - c0:ck1 - c0]
                bar.update(1)
    return out


def denoise_cube(model: SSCANModel, cube: HsiCube, tile: int = DEFAULT_TILE, margin: int = DEFAULT_MARGIN,
                 progress: bool = False) -> HsiCube:
    """
    Denoise a whole normalized cube without building a gradient graph. Cubes larger than
    `tile` in either spatial extent are processed in overlapping tiles.

    Args:
        model (SSCANModel): the model
        cube (HsiCube): the noisy cube
        tile (int): spatial tile side
        margin (int): overlap context kept around each tile
        progress (bool): show a progress bar over the tiles

    Returns:
        HsiCube: the denoised cube, same extents and band_scale

    :raises BandMismatchError: If the cube and the model disagree on the band count.
    """
    if cube.bands != model.config.bands:
        raise BandMismatchError(f"the checkpoint was trained for {model.config.bands} bands, "
                                f"the cube has {cube.bands}")

    def forward(block: np.ndarray) -> np.ndarray:
        return model(Tensor(block[None].astype(model.config.dtype))).data[0]

    logging.info(f"denoising {cube} with tile {tile} and margin {margin}")
    with no_grad():
        denoised = tile_apply(forward, cube.data, tile, margin, progress)
    return cube.with_data(denoised)
