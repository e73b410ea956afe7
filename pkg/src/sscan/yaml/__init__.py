# This is the __init__.py file for the sscan.yaml package

from .sscan_yaml_loader import SscanLoader, load_yaml_file, setup_yaml_for_env_vars
from .sscan_yaml_object import SscanYAMLObject


setup_yaml_for_env_vars()

__all__ = ['setup_yaml_for_env_vars', 'SscanLoader', 'SscanYAMLObject', 'load_yaml_file']
