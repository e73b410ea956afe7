"""
SSCK v1 checkpoints.

    8 bytes   magic "SSCKPT01"
    u32       format version (1)
    config    k, o, n_ssab, trunk_channels, group_channels, reduction, spatial_kernel, bands as u32;
              seed as u64; fusion_ssab as u32; ssab_trunk, sgcam_activation code, dtype code as u8
    u32       parameter record count
    records   u16 name length, UTF-8 name, u8 rank, rank × u32 extents, payload in the model dtype
    8 bytes   BLAKE2b-64 digest of everything before it

All integers and payloads are little-endian.
"""
import hashlib
import logging
import struct
from typing import List, Tuple

import numpy as np

from sscan.errors import CheckpointChecksumError, CheckpointFormatError, CheckpointVersionError, ConfigError
from sscan.network.config import MODEL_DTYPES, SGCAM_ACTIVATIONS, ModelConfig
from sscan.network.model import SSCANModel

SSCK_MAGIC = b"SSCKPT01"
SSCK_VERSION = 1
_DIGEST_SIZE = 8
_CONFIG = struct.Struct("<8IQI3B")


def _digest(raw: bytes) -> bytes:
    return hashlib.blake2b(raw, digest_size=_DIGEST_SIZE).digest()


def _encode_config(config: ModelConfig) -> bytes:
    return _CONFIG.pack(config.k, config.o, config.n_ssab, config.trunk_channels, config.group_channels,
                        config.reduction, config.spatial_kernel, config.bands, config.seed, config.fusion_ssab,
                        int(config.ssab_trunk), SGCAM_ACTIVATIONS.index(config.sgcam_activation),
                        MODEL_DTYPES.index(config.dtype.name))


def _decode_config(raw: bytes, offset: int) -> ModelConfig:
    (k, o, n_ssab, trunk_channels, group_channels, reduction, spatial_kernel, bands, seed, fusion_ssab,
     ssab_trunk, activation, dtype) = _CONFIG.unpack_from(raw, offset)
    if ssab_trunk > 1 or activation >= len(SGCAM_ACTIVATIONS) or dtype >= len(MODEL_DTYPES):
        raise CheckpointFormatError("checkpoint configuration holds an unknown enumeration code")
    try:
        return ModelConfig(bands=bands, k=k, o=o, n_ssab=n_ssab, trunk_channels=trunk_channels,
                           group_channels=group_channels, reduction=reduction, spatial_kernel=spatial_kernel,
                           seed=seed, fusion_ssab=fusion_ssab, ssab_trunk=bool(ssab_trunk),
                           sgcam_activation=SGCAM_ACTIVATIONS[activation], dtype=MODEL_DTYPES[dtype])
    except ConfigError as e:
        raise CheckpointFormatError(f"checkpoint holds an invalid configuration: {e}") from e


def encode_checkpoint(model: SSCANModel) -> bytes:
    """
    Serialize the configuration and every parameter of a model.

    Args:
        model (SSCANModel): the model

    Returns:
        bytes: the SSCK v1 file contents, checksum included
    """
    payload_dtype = model.config.dtype.newbyteorder("<")
    records = list(model.named_parameters())
    parts = [SSCK_MAGIC, struct.pack("<I", SSCK_VERSION), _encode_config(model.config), struct.pack("<I", len(records))]
    for name, parameter in records:
        encoded_name = name.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded_name)))
        parts.append(encoded_name)
        parts.append(struct.pack(f"<B{parameter.ndim}I", parameter.ndim, *parameter.shape))
        parts.append(np.ascontiguousarray(parameter.data, dtype=payload_dtype).tobytes())
    body = b"".join(parts)
    return body + _digest(body)


def _read_records(raw: bytes, offset: int, count: int, dtype: np.dtype) -> List[Tuple[str, np.ndarray]]:
    records = []
    try:
        for _ in range(count):
            (name_length,) = struct.unpack_from("<H", raw, offset)
            offset += 2
            name = raw[offset:offset + name_length].decode("utf-8")
            offset += name_length
            (rank,) = struct.unpack_from("<B", raw, offset)
            offset += 1
            shape = struct.unpack_from(f"<{rank}I", raw, offset)
            offset += 4 * rank
            size = int(np.prod(shape, dtype=np.int64))
            if offset + size * dtype.itemsize > len(raw):
                raise CheckpointFormatError(f"parameter '{name}' payload runs past the end of the checkpoint")
            values = np.frombuffer(raw, dtype=dtype, count=size, offset=offset).reshape(shape)
            offset += size * dtype.itemsize
            records.append((name, values.astype(dtype.newbyteorder("="))))
    except (struct.error, UnicodeDecodeError) as e:
        raise CheckpointFormatError(f"malformed parameter record: {e}") from e
    if offset != len(raw):
        raise CheckpointFormatError(f"{len(raw) - offset} unexpected bytes after the last parameter record")
    return records


def decode_checkpoint(raw: bytes) -> SSCANModel:
    """
    Rebuild a model from SSCK v1 contents.

    Args:
        raw (bytes): the file contents

    Returns:
        SSCANModel: the model with the stored configuration and parameters

    :raises CheckpointFormatError: If the magic, the layout or the parameter set is wrong.
    :raises CheckpointChecksumError: If the trailing digest does not match.
    :raises CheckpointVersionError: If the file was written by another format version.
    """
    header = len(SSCK_MAGIC) + 4 + _CONFIG.size + 4
    if len(raw) < header + _DIGEST_SIZE or raw[:len(SSCK_MAGIC)] != SSCK_MAGIC:
        raise CheckpointFormatError("not an SSCK checkpoint")
    body, digest = raw[:-_DIGEST_SIZE], raw[-_DIGEST_SIZE:]
    if _digest(body) != digest:
        raise CheckpointChecksumError("checkpoint checksum mismatch: the file is corrupted")
    (version,) = struct.unpack_from("<I", body, len(SSCK_MAGIC))
    if version != SSCK_VERSION:
        raise CheckpointVersionError(f"checkpoint format version {version} is not supported (expected {SSCK_VERSION})")

    config = _decode_config(body, len(SSCK_MAGIC) + 4)
    (count,) = struct.unpack_from("<I", body, header - 4)
    records = _read_records(body, header, count, config.dtype.newbyteorder("<"))

    model = SSCANModel(config)
    expected = dict(model.named_parameters())
    stored = dict(records)
    if set(stored) != set(expected):
        missing = sorted(set(expected) - set(stored))
        extra = sorted(set(stored) - set(expected))
        raise CheckpointFormatError(f"parameter set does not match the configuration: missing {missing}, "
                                    f"unexpected {extra}")
    for name, parameter in expected.items():
        if stored[name].shape != parameter.shape:
            raise CheckpointFormatError(f"parameter '{name}' has shape {stored[name].shape}, "
                                        f"the configuration implies {parameter.shape}")
        parameter.data = stored[name]
    return model


def save_checkpoint(model: SSCANModel, path: str):
    """
    Write a model to an SSCK v1 file.

    Args:
        model (SSCANModel): the model
        path (str): the destination
    """
    raw = encode_checkpoint(model)
    with open(path, "wb") as stream:
        stream.write(raw)
    logging.debug(f"wrote checkpoint {path} ({len(raw)} bytes)")


def load_checkpoint(path: str) -> SSCANModel:
    """
    Read a model from an SSCK v1 file.

    Args:
        path (str): the checkpoint

    Returns:
        SSCANModel: the restored model
    """
    with open(path, "rb") as stream:
        model = decode_checkpoint(stream.read())
    logging.info(f"loaded checkpoint {path}: {model}")
    return model

