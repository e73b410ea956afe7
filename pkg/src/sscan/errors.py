"""
Exception hierarchy for the sscan package. Every error raised on purpose by the library
derives from SscanError, so callers (the CLI in particular) can map families of errors to
exit codes.
"""
from typing import Optional


class SscanError(Exception):
    pass


class ShapeError(SscanError, ValueError):
    """A tensor or cube does not have the shape an operation requires."""


class ConfigError(SscanError, ValueError):
    """An invalid configuration value. The offending field is available as `field`."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class CubeFormatError(SscanError):
    """A cube file could not be decoded."""


class BadMagicError(CubeFormatError):
    pass


class TruncatedPayloadError(CubeFormatError):
    pass


class DimensionOverflowError(CubeFormatError):
    pass


class UnsupportedDTypeError(CubeFormatError):
    pass


class CheckpointError(SscanError):
    """A checkpoint file could not be decoded."""


class CheckpointFormatError(CheckpointError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointChecksumError(CheckpointError):
    pass


class NumericalError(SscanError):
    """A computation produced non-finite values."""


class NonFiniteGradientError(NumericalError):

    def __init__(self, parameter: str, message: Optional[str] = None):
        super().__init__(message or f"non-finite gradient for parameter '{parameter}'")
        self.parameter = parameter


class TrainingDivergedError(NumericalError):
    pass


class MetricError(SscanError, ValueError):
    """A quality metric is undefined for the given inputs."""


class BandMismatchError(SscanError, ValueError):
    pass
