import pytest
import yaml

from sscan.errors import ConfigError
from sscan.training import TRAIN_FIELDS, TrainConfig, lr_at
from sscan.yaml import SscanLoader

TRAIN_YAML = """
!sscan.training.TrainConfig
epochs: 120
initial_lr: 0.0002
decay_epoch: 60
batch_size: 8
checkpoint_dir: runs/dc-mall
clip_norm: 5
"""


def test_defaults():
    config = TrainConfig()
    assert config.epochs == 100
    assert config.initial_lr == 1e-4
    assert (config.decay_epoch, config.decay_factor) == (50, 10.0)
    assert (config.batch_size, config.patch_size, config.patches_per_epoch) == (16, 40, 2000)
    assert config.sigma == 25.0
    assert config.checkpoint_dir is None and config.clip_norm is None
    assert (config.tile, config.margin) == (200, 16)


def test_learning_rate_schedule():
    config = TrainConfig(initial_lr=1e-3, decay_epoch=3, decay_factor=4)
    assert [lr_at(config, epoch) for epoch in (1, 2, 3, 10)] == [1e-3, 1e-3, 2.5e-4, 2.5e-4]
    with pytest.raises(ValueError):
        lr_at(config, 0)


def test_default_schedule_decays_after_fifty_epochs():
    config = TrainConfig()
    assert lr_at(config, 49) == pytest.approx(1e-4)
    assert lr_at(config, 50) == pytest.approx(1e-5)


@pytest.mark.parametrize("overrides, field", [
    ({"epochs": -1}, "epochs"),
    ({"batch_size": 0}, "batch_size"),
    ({"initial_lr": 0}, "initial_lr"),
    ({"decay_factor": 1}, "decay_factor"),
    ({"sigma": -5}, "sigma"),
    ({"clip_norm": 0}, "clip_norm"),
    ({"tile": 32, "margin": 16}, "tile"),
    ({"patch_size": 2.0}, "patch_size"),
    ({"eval_every": True}, "eval_every"),
    ({"noise_seed": -1}, "noise_seed"),
])
def test_invalid_values_name_the_field(overrides, field):
    with pytest.raises(ConfigError) as e:
        TrainConfig(**overrides)
    assert e.value.field == field


def test_numbers_are_converted():
    config = TrainConfig(initial_lr=1, sigma=50, clip_norm=2)
    assert isinstance(config.initial_lr, float)
    assert isinstance(config.sigma, float)
    assert config.clip_norm == 2.0 and isinstance(config.clip_norm, float)


def test_replace():
    config = TrainConfig(epochs=10, batch_size=4)
    changed = config.replace(epochs=3, batch_size=None)
    assert (changed.epochs, changed.batch_size) == (3, 4)
    assert list(changed.to_dict()) == list(TRAIN_FIELDS)


def test_from_yaml():
    config = yaml.load(TRAIN_YAML, Loader=SscanLoader)
    assert isinstance(config, TrainConfig)
    assert (config.epochs, config.decay_epoch, config.batch_size) == (120, 60, 8)
    assert config.initial_lr == pytest.approx(2e-4)
    assert config.checkpoint_dir == "runs/dc-mall"
    assert config.clip_norm == 5.0
    assert config.patch_size == 40


def test_yaml_reads_the_environment(monkeypatch):
    monkeypatch.setenv("EPOCHS", "7")
    config = yaml.load(TRAIN_YAML.replace("epochs: 120", "epochs: ${EPOCHS}"), Loader=SscanLoader)
    assert config.epochs == 7


def test_yaml_is_validated():
    with pytest.raises(ConfigError):
        yaml.load(TRAIN_YAML.replace("batch_size: 8", "batch_size: 0"), Loader=SscanLoader)
