"""
Cube files.

HSIC v1 layout, all little-endian:

    8 bytes   magic "HSICUBE1"
    3 × u32   height, width, bands
    u8        dtype code (1 = float32, 2 = float64)
    u8        flags (bit 0: band_scale table present)
    [bands × 2 × f64]  per-band (min, max), only when flagged
    payload   band-sequential values

Externally produced cubes with an ENVI-style plain-text header (`samples`, `lines`, `bands`,
`data type`, `interleave`) are imported with `load_envi`.
"""
import logging
import struct
from typing import Optional

import numpy as np
from spectral.io import envi

from sscan.errors import (BadMagicError, CubeFormatError, DimensionOverflowError, TruncatedPayloadError,
                          UnsupportedDTypeError)
from sscan.hsi.cube import HsiCube

HSIC_MAGIC = b"HSICUBE1"
_HEADER = struct.Struct("<8sIIIBB")
_DTYPE_CODES = {1: np.dtype("<f4"), 2: np.dtype("<f8")}
_FLAG_BAND_SCALE = 0x01
# refuse headers whose payload would exceed 1 TiB
MAX_PAYLOAD_BYTES = 1 << 40


def _dtype_code(dtype: np.dtype) -> int:
    if dtype == np.float32:
        return 1
    if dtype == np.float64:
        return 2
    raise UnsupportedDTypeError(f"HSIC v1 stores float32 or float64 values, got {dtype}")


def encode_cube(cube: HsiCube) -> bytes:
    """
    Serialize a cube in the HSIC v1 layout.

    Args:
        cube (HsiCube): the cube

    Returns:
        bytes: the encoded file contents
    """
    data = cube.data
    if data.dtype not in (np.float32, np.float64):
        data = data.astype(np.float64)
    for name, extent in (("height", cube.height), ("width", cube.width), ("bands", cube.bands)):
        if extent >= 1 << 32:
            raise DimensionOverflowError(f"{name} {extent} does not fit in 32 bits")
    code = _dtype_code(data.dtype)
    flags = _FLAG_BAND_SCALE if cube.band_scale is not None else 0
    parts = [_HEADER.pack(HSIC_MAGIC, cube.height, cube.width, cube.bands, code, flags)]
    if cube.band_scale is not None:
        parts.append(np.ascontiguousarray(cube.band_scale, dtype="<f8").tobytes())
    parts.append(np.ascontiguousarray(data, dtype=_DTYPE_CODES[code]).tobytes())
    return b"".join(parts)


def decode_cube(raw: bytes) -> HsiCube:
    """
    Decode HSIC v1 file contents.

    Args:
        raw (bytes): the file contents

    Returns:
        HsiCube: the cube, values in the stored precision

    :raises BadMagicError: If the magic bytes are wrong.
    :raises DimensionOverflowError: If the header describes an impossibly large payload.
    :raises TruncatedPayloadError: If the file is shorter than its header advertises.
    """
    if len(raw) < len(HSIC_MAGIC) or raw[:len(HSIC_MAGIC)] != HSIC_MAGIC:
        raise BadMagicError(f"not an HSIC v1 cube: magic {raw[:len(HSIC_MAGIC)]!r}")
    if len(raw) < _HEADER.size:
        raise TruncatedPayloadError(f"header needs {_HEADER.size} bytes, file has {len(raw)}")
    _, height, width, bands, code, flags = _HEADER.unpack_from(raw)
    if code not in _DTYPE_CODES:
        raise UnsupportedDTypeError(f"unknown dtype code {code}")
    if min(height, width, bands) == 0:
        raise CubeFormatError(f"zero extent in header: {height} × {width} × {bands}")
    dtype = _DTYPE_CODES[code]
    payload_bytes = height * width * bands * dtype.itemsize
    if payload_bytes > MAX_PAYLOAD_BYTES:
        raise DimensionOverflowError(f"header advertises {height} × {width} × {bands} values ({payload_bytes} bytes)")

    offset = _HEADER.size
    band_scale = None
    if flags & _FLAG_BAND_SCALE:
        table_bytes = bands * 2 * 8
        if len(raw) < offset + table_bytes:
            raise TruncatedPayloadError(f"band_scale table truncated: need {table_bytes} bytes")
        band_scale = np.frombuffer(raw, dtype="<f8", count=bands * 2, offset=offset).reshape(bands, 2).astype(np.float64)
        offset += table_bytes

    available = len(raw) - offset
    if available < payload_bytes:
        raise TruncatedPayloadError(f"payload truncated: header advertises {payload_bytes} bytes, {available} present")
    if available > payload_bytes:
        logging.warning(f"ignoring {available - payload_bytes} trailing bytes after the cube payload")
    values = np.frombuffer(raw, dtype=dtype, count=height * width * bands, offset=offset)
    return HsiCube(values.astype(dtype.newbyteorder("="), copy=True).reshape(bands, height, width), band_scale)


def save_cube(cube: HsiCube, path: str):
    """
    Write a cube to an HSIC v1 file.

    Args:
        cube (HsiCube): the cube
        path (str): the destination
    """
    with open(path, "wb") as stream:
        stream.write(encode_cube(cube))
    logging.debug(f"wrote {cube} to {path}")


def load_cube(path: str) -> HsiCube:
    """
    Read an HSIC v1 file.

    Args:
        path (str): the file

    Returns:
        HsiCube: the cube
    """
    with open(path, "rb") as stream:
        cube = decode_cube(stream.read())
    logging.debug(f"read {cube} from {path}")
    return cube


def load_envi(header_path: str, image_path: Optional[str] = None) -> HsiCube:
    """
    Import a cube described by an ENVI-style sidecar header (`samples`, `lines`, `bands`,
    `data type`, `interleave`, `byte order`). Values are converted to float64.

    Args:
        header_path (str): the `.hdr` file
        image_path (Optional[str]): the raw image file; found next to the header if None

    Returns:
        HsiCube: the raw (not normalized) cube
    """
    image = envi.open(header_path, image_path)
    interleave = str(image.metadata.get("interleave", "bsq")).lower()
    if interleave != "bsq":
        logging.info(f"{header_path}: converting {interleave} interleave to band-sequential")
    hwb = np.asarray(image.load(), dtype=np.float64)
    return HsiCube.from_hwb(hwb)


def read_any(path: str) -> HsiCube:
    """Load an HSIC v1 file, or an ENVI image when given its `.hdr` header."""
    if path.lower().endswith(".hdr"):
        return load_envi(path)
    return load_cube(path)
