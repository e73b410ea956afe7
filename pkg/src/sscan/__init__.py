# This is the __init__.py file for the sscan package

import os

# SSCAN_THREADS caps BLAS/OpenMP parallelism; it has to be in the environment
# before numpy is imported by any of the sub-packages.
_threads = os.getenv("SSCAN_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

from .utils import AbstractClassError, derive_seed, enforce_no_abstract_class_instances
from .errors import (BandMismatchError, CheckpointError, ConfigError, CubeFormatError, MetricError,
                     NumericalError, ShapeError, SscanError)

__all__ = ['AbstractClassError', 'enforce_no_abstract_class_instances', 'derive_seed',
           'SscanError', 'ShapeError', 'ConfigError', 'CubeFormatError', 'CheckpointError',
           'NumericalError', 'MetricError', 'BandMismatchError']
