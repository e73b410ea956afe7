# This is the __init__.py file for the sscan.hsi package

from .cube import HsiCube
from .cube_io import HSIC_MAGIC, decode_cube, encode_cube, load_cube, load_envi, read_any, save_cube
from .grouping import BandGroupingSpec, BandGroups, make_band_groups
from .noise import NoiseSpec, add_gaussian_noise, gaussian_noise
from .preprocessing import PatchSpec, crop, denormalize, extract_patches, normalize, patch_corners, split_spatial

__all__ = ['HsiCube', 'HSIC_MAGIC', 'encode_cube', 'decode_cube', 'load_cube', 'save_cube', 'load_envi', 'read_any',
           'BandGroupingSpec', 'BandGroups', 'make_band_groups', 'NoiseSpec', 'add_gaussian_noise', 'gaussian_noise',
           'PatchSpec', 'normalize', 'denormalize', 'split_spatial', 'crop', 'extract_patches', 'patch_corners']
