# This is the __init__.py file for the tests.sscan package

from .testing_utils import brute_force_ssim, model_parameter_total, random_cube, small_model_config, write_cube

__all__ = ['random_cube', 'write_cube', 'small_model_config', 'brute_force_ssim', 'model_parameter_total']
