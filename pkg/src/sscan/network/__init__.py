# This is the __init__.py file for the sscan.network package

from .config import CONFIG_FIELDS, MODEL_DTYPES, SGCAM_ACTIVATIONS, ModelConfig
from .modules import SGCAM, SSAB, SSAN, ChannelAttention, Conv, Module, SpatialAttention
from .model import (SSCANModel, build_model, model_forward, named_parameters, parameter_count, sgcam_forward,
                    ssab_forward, ssan_forward)
from .checkpoint import (SSCK_MAGIC, SSCK_VERSION, decode_checkpoint, encode_checkpoint, load_checkpoint,
                         save_checkpoint)
from .inference import denoise_cube, tile_apply, tile_windows
from .gradcheck_suite import GRADCHECK_OPERATIONS, GradcheckResult, run_gradcheck_suite, tiny_model_config

__all__ = ['ModelConfig', 'CONFIG_FIELDS', 'MODEL_DTYPES', 'SGCAM_ACTIVATIONS',
           'Module', 'Conv', 'ChannelAttention', 'SpatialAttention', 'SGCAM', 'SSAB', 'SSAN',
           'SSCANModel', 'build_model', 'model_forward', 'sgcam_forward', 'ssab_forward', 'ssan_forward',
           'named_parameters', 'parameter_count',
           'SSCK_MAGIC', 'SSCK_VERSION', 'encode_checkpoint', 'decode_checkpoint', 'save_checkpoint', 'load_checkpoint',
           'tile_apply', 'tile_windows', 'denoise_cube',
           'GradcheckResult', 'GRADCHECK_OPERATIONS', 'run_gradcheck_suite', 'tiny_model_config']
