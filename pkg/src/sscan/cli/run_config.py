import logging
from typing import Any, Dict, Optional, Tuple

from pydantic import BaseModel

from sscan.errors import ConfigError
from sscan.hsi.noise import NoiseSpec
from sscan.network.config import ModelConfig
from sscan.training.config import TrainConfig
from sscan.yaml import load_yaml_file

_SECTIONS = ("model", "train")


class RunConfig(BaseModel):
    """
    Everything one CLI invocation resolved from its flags and run file.

    Attributes:
        subcommand (str): the subcommand that ran
        paths (Dict[str, Optional[str]]): input and output files by flag name
        model (Optional[Dict[str, Any]]): the resolved model configuration
        train (Optional[Dict[str, Any]]): the resolved training configuration
        noise (Optional[NoiseSpec]): the noise the subcommand draws
        crop (Optional[Tuple[int, int, int, int]]): the test window as (x, y, h, w)
        verbosity (str): the log level name
    """
    subcommand: str
    paths: Dict[str, Optional[str]] = {}
    model: Optional[Dict[str, Any]] = None
    train: Optional[Dict[str, Any]] = None
    noise: Optional[NoiseSpec] = None
    crop: Optional[Tuple[int, int, int, int]] = None
    verbosity: str = "INFO"

    def log(self):
        logging.info(f"resolved run configuration: {self.model_dump_json()}")


def _section(document: dict, name: str, cls: type):
    value = document.get(name)
    if value is None or isinstance(value, cls):
        return value
    if not isinstance(value, dict):
        raise ConfigError(name, f"expected a mapping or a {cls.yaml_tag} object, got {type(value).__name__}")
    try:
        return cls(**value)
    except TypeError as e:
        raise ConfigError(name, str(e)) from e


def load_run_config(path: str) -> Tuple[Optional[ModelConfig], Optional[TrainConfig]]:
    """
    Read a YAML run file whose top-level keys are `model` and `train`. Each section may be a
    tagged object (`!sscan.network.ModelConfig`, `!sscan.training.TrainConfig`) or a plain
    mapping of the same keys. `${VAR}` references are resolved from the environment.

    Args:
        path (str): the run file

    Returns:
        Tuple[Optional[ModelConfig], Optional[TrainConfig]]: the sections present in the file

    :raises ConfigError: If the file has unknown sections or invalid values.
    """
    document = load_yaml_file(path)
    if document is None:
        document = {}
    if not isinstance(document, dict):
        raise ConfigError("run", f"{path} must hold a mapping with the keys {', '.join(_SECTIONS)}")
    unknown = sorted(set(document) - set(_SECTIONS))
    if unknown:
        raise ConfigError("run", f"unknown section(s) {unknown} in {path}")
    model = _section(document, "model", ModelConfig)
    train = _section(document, "train", TrainConfig)
    logging.debug(f"loaded run file {path}: model={model!r} train={train!r}")
    return model, train
