from typing import Optional

from sscan.constants import (DEFAULT_BATCH_SIZE, DEFAULT_DECAY_EPOCH, DEFAULT_DECAY_FACTOR, DEFAULT_LR, DEFAULT_MARGIN,
                             DEFAULT_PATCH_SIZE, DEFAULT_PATCHES_PER_EPOCH, DEFAULT_SIGMA, DEFAULT_TILE)
from sscan.errors import ConfigError
from sscan.yaml.sscan_yaml_object import SscanYAMLObject

TRAIN_FIELDS = ("epochs", "initial_lr", "decay_epoch", "decay_factor", "batch_size", "patch_size",
                "patches_per_epoch", "patch_seed", "sigma", "noise_seed", "test_noise_seed", "eval_every",
                "checkpoint_dir", "clip_norm", "tile", "margin")


class TrainConfig(SscanYAMLObject):
    '''
    Optimization schedule, data sampling and evaluation settings of a training run. Declared in
    YAML as

        train: !sscan.training.TrainConfig
          epochs: 100
          checkpoint_dir: runs/dc-mall
    '''
    yaml_tag = u'!sscan.training.TrainConfig'

    def __new__(cls, *args, **kwargs):
        '''Create a new instance of the class, setting default values for the instance variables.'''
        obj = super().__new__(cls)
        obj._epochs = 100
        obj._initial_lr = DEFAULT_LR
        obj._decay_epoch = DEFAULT_DECAY_EPOCH
        obj._decay_factor = DEFAULT_DECAY_FACTOR
        obj._batch_size = DEFAULT_BATCH_SIZE
        obj._patch_size = DEFAULT_PATCH_SIZE
        obj._patches_per_epoch = DEFAULT_PATCHES_PER_EPOCH
        obj._patch_seed = 0
        obj._sigma = DEFAULT_SIGMA
        obj._noise_seed = 1
        obj._test_noise_seed = 2
        obj._eval_every = 1
        obj._checkpoint_dir = None
        obj._clip_norm = None
        obj._tile = DEFAULT_TILE
        obj._margin = DEFAULT_MARGIN
        return obj

    def __init__(self, epochs: int = 100, initial_lr: float = DEFAULT_LR, decay_epoch: int = DEFAULT_DECAY_EPOCH,
                 decay_factor: float = DEFAULT_DECAY_FACTOR, batch_size: int = DEFAULT_BATCH_SIZE,
                 patch_size: int = DEFAULT_PATCH_SIZE, patches_per_epoch: int = DEFAULT_PATCHES_PER_EPOCH,
                 patch_seed: int = 0, sigma: float = DEFAULT_SIGMA, noise_seed: int = 1, test_noise_seed: int = 2,
                 eval_every: int = 1, checkpoint_dir: Optional[str] = None, clip_norm: Optional[float] = None,
                 tile: int = DEFAULT_TILE, margin: int = DEFAULT_MARGIN):
        '''Initialize the configuration.

        Args:
            epochs (int): number of epochs, 0 runs nothing
            initial_lr (float): learning rate before the decay epoch
            decay_epoch (int): first epoch trained at initial_lr / decay_factor
            decay_factor (float): learning-rate divisor, > 1
            batch_size (int): patches per ADAM step
            patch_size (int): spatial side of the training patches
            patches_per_epoch (int): patches drawn (and re-noised) every epoch
            patch_seed (int): base seed of the patch positions
            sigma (float): training noise level in 8-bit units
            noise_seed (int): base seed of the training noise
            test_noise_seed (int): seed of the fixed noisy test cube `sscan prepare --config` writes
            eval_every (int): epochs between evaluations on the test pair; the last epoch is always evaluated
            checkpoint_dir (Optional[str]): where train.log, best.ssck and last.ssck go; nothing is written if None
            clip_norm (Optional[float]): global gradient-norm limit, disabled if None
            tile (int): spatial tile side of evaluation-time inference
            margin (int): tile overlap context of evaluation-time inference
        '''
        super().__init__()
        d = self._validate_and_convert_types({f"_{name}": value for name, value in (
            ("epochs", epochs), ("initial_lr", initial_lr), ("decay_epoch", decay_epoch),
            ("decay_factor", decay_factor), ("batch_size", batch_size), ("patch_size", patch_size),
            ("patches_per_epoch", patches_per_epoch), ("patch_seed", patch_seed), ("sigma", sigma),
            ("noise_seed", noise_seed), ("test_noise_seed", test_noise_seed), ("eval_every", eval_every),
            ("checkpoint_dir", checkpoint_dir), ("clip_norm", clip_norm), ("tile", tile), ("margin", margin))})
        for key, value in d.items():
            setattr(self, key, value)

    def __repr__(self):
        fields = ", ".join(f"{name}={getattr(self, name)}" for name in TRAIN_FIELDS)
        return f"{self.__class__.__name__}({fields})"

    def _validate_and_convert_types(self, d: dict) -> dict:
        for name in ("epochs", "decay_epoch", "batch_size", "patch_size", "patches_per_epoch", "patch_seed",
                     "noise_seed", "test_noise_seed", "eval_every", "tile", "margin"):
            value = d.get(f"_{name}")
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(name, f"must be an integer, got {value!r}")
        for name in ("initial_lr", "decay_factor", "sigma"):
            value = d.get(f"_{name}")
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(name, f"must be a number, got {value!r}")
            d[f"_{name}"] = float(value)

        if d["_epochs"] < 0:
            raise ConfigError("epochs", f"must not be negative, got {d['_epochs']}")
        for name in ("decay_epoch", "batch_size", "patch_size", "patches_per_epoch", "eval_every", "tile"):
            if d[f"_{name}"] < 1:
                raise ConfigError(name, f"must be positive, got {d[f'_{name}']}")
        for name in ("patch_seed", "noise_seed", "test_noise_seed", "margin"):
            if d[f"_{name}"] < 0:
                raise ConfigError(name, f"must not be negative, got {d[f'_{name}']}")
        if d["_initial_lr"] <= 0:
            raise ConfigError("initial_lr", f"must be positive, got {d['_initial_lr']}")
        if d["_decay_factor"] <= 1:
            raise ConfigError("decay_factor", f"must be greater than 1, got {d['_decay_factor']}")
        if d["_sigma"] < 0:
            raise ConfigError("sigma", f"must not be negative, got {d['_sigma']}")
        if d["_tile"] <= 2 * d["_margin"]:
            raise ConfigError("tile", f"tile {d['_tile']} must exceed twice the margin {d['_margin']}")
        clip_norm = d.get("_clip_norm")
        if clip_norm is not None:
            if isinstance(clip_norm, bool) or not isinstance(clip_norm, (int, float)) or clip_norm <= 0:
                raise ConfigError("clip_norm", f"must be a positive number or null, got {clip_norm!r}")
            d["_clip_norm"] = float(clip_norm)
        checkpoint_dir = d.get("_checkpoint_dir")
        if checkpoint_dir is not None:
            d["_checkpoint_dir"] = str(checkpoint_dir)
        return d

    @property
    def epochs(self) -> int:
        return self._epochs

    @property
    def initial_lr(self) -> float:
        """Get the learning rate of the first epochs."""
        return self._initial_lr

    @property
    def decay_epoch(self) -> int:
        return self._decay_epoch

    @property
    def decay_factor(self) -> float:
        return self._decay_factor

    @property
    def batch_size(self) -> int:
        return self._batch_size

    @property
    def patch_size(self) -> int:
        return self._patch_size

    @property
    def patches_per_epoch(self) -> int:
        return self._patches_per_epoch

    @property
    def patch_seed(self) -> int:
        return self._patch_seed

    @property
    def sigma(self) -> float:
        """Get the training noise level in 8-bit units."""
        return self._sigma

    @property
    def noise_seed(self) -> int:
        return self._noise_seed

    @property
    def test_noise_seed(self) -> int:
        return self._test_noise_seed

    @property
    def eval_every(self) -> int:
        return self._eval_every

    @property
    def checkpoint_dir(self) -> Optional[str]:
        """Get the output directory, None for runs that write nothing."""
        return self._checkpoint_dir

    @property
    def clip_norm(self) -> Optional[float]:
        return self._clip_norm

    @property
    def tile(self) -> int:
        return self._tile

    @property
    def margin(self) -> int:
        return self._margin

    def to_dict(self) -> dict:
        return {name: getattr(self, f"_{name}") for name in TRAIN_FIELDS}

    def replace(self, **overrides) -> "TrainConfig":
        """A validated copy with some fields overridden; None values leave a field unchanged."""
        values = self.to_dict()
        values.update({key: value for key, value in overrides.items() if value is not None})
        return TrainConfig(**values)


def lr_at(config: TrainConfig, epoch: int) -> float:
    """
    The learning rate of a 1-based epoch: initial_lr before decay_epoch, initial_lr / decay_factor
    from decay_epoch on.

    Args:
        config (TrainConfig): the schedule
        epoch (int): the epoch, >= 1

    Returns:
        float: the learning rate
    """
    if epoch < 1:
        raise ValueError(f"epochs are numbered from 1, got {epoch}")
    if epoch < config.decay_epoch:
        return config.initial_lr
    return config.initial_lr / config.decay_factor
