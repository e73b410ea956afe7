# This is the __init__.py file for the sscan.cli package

from .run_config import RunConfig, load_run_config

__all__ = ['RunConfig', 'load_run_config']
