import importlib
import os
import re
from typing import Any

import yaml

from yaml.reader import Reader
from yaml.scanner import Scanner
from yaml.parser import Parser
from yaml.composer import Composer
from yaml.constructor import FullConstructor
from yaml.resolver import Resolver

_env_var_token = "env_var"


class SscanLoader(Reader, Scanner, Parser, Composer, FullConstructor, Resolver):
    """
    A YAML loader for sscan configuration files.

    Before constructing the document it scans the tags (e.g. `!sscan.network.ModelConfig`) and
    imports the module that defines each tagged class, so a run file can be loaded without the
    caller importing every configuration class first.
    """

    def __init__(self, stream):
        opened_file = False
        stream_copy = None
        try:
            if isinstance(stream, str):
                stream_copy = "" + stream
            elif isinstance(stream, bytes):
                stream_copy = b"" + stream
            else:
                opened_file = True
                stream_copy = open(getattr(stream, 'name', "<file>"))

            Reader.__init__(self, stream)
            Scanner.__init__(self)
            Parser.__init__(self)
            Composer.__init__(self)
            FullConstructor.__init__(self)
            Resolver.__init__(self)

            seen_packages = set()
            for token in yaml.scan(stream_copy):
                if type(token) is not yaml.TagToken or token.value[0] != "!":
                    continue
                if token.value[1] == _env_var_token:
                    continue
                package_name = ".".join(token.value[1].split(".")[:-1])
                if not package_name or package_name in seen_packages:
                    continue
                seen_packages.add(package_name)
                importlib.import_module(package_name)
        finally:
            if opened_file:
                stream_copy.close()


_env_pattern = re.compile(r".*?\${(.*?)}.*?")
_reference_pattern = re.compile(r"\${(.*?)}")
_literals = {"true": True, "false": False, "null": None, "none": None, "~": None}


def _lookup(reference: str, value: str) -> str:
    name, separator, default = reference.partition(":")
    if separator and ":" in default:
        raise ValueError(f"Invalid value '{reference}' in '{value}'")
    env_value = os.getenv(name)
    if env_value is not None:
        return env_value
    if separator:
        return default
    raise ValueError(f"No environment variable called '{name}', and no default value was specified for '{value}'")


def _typed(value: str) -> Any:
    if value.lower() in _literals:
        return _literals[value.lower()]
    for convert in (int, float):
        try:
            return convert(value)
        except ValueError:
            continue
    return value


def _env_constructor(loader, node):
    value = loader.construct_scalar(node)
    return _typed(_reference_pattern.sub(lambda match: _lookup(match.group(1), value), value))


def setup_yaml_for_env_vars():
    """
    Configures the YAML Loader to do replacement of environment variables.
    It will replace YAML value strings such as '${SIGMA}' and '${EPOCHS:100}' with environment
    variable lookups. In the first example the string is replaced by `os.getenv("SIGMA")` and an
    error is raised if the variable is not set. In the second one the default '100' is used
    when 'EPOCHS' is not set. Replaced values that look like numbers or booleans come back typed.
    """
    yaml.add_implicit_resolver(f"!{_env_var_token}", _env_pattern)
    yaml.add_constructor(f"!{_env_var_token}", _env_constructor)

    yaml.add_implicit_resolver(f"!{_env_var_token}", _env_pattern, Loader=SscanLoader)
    yaml.add_constructor(f"!{_env_var_token}", _env_constructor, Loader=SscanLoader)


def load_yaml_file(path: str) -> Any:
    """
    Load a single YAML document from a file with the SscanLoader.

    Args:
        path (str): the file to read

    Returns:
        Any: the constructed document
    """
    with open(path) as stream:
        return yaml.load(stream, Loader=SscanLoader)
