import logging

import pytest

from sscan.cli import RunConfig, load_run_config
from sscan.errors import ConfigError
from sscan.hsi import NoiseSpec
from sscan.network import ModelConfig
from sscan.training import TrainConfig


def _write(tmp_path, text: str) -> str:
    path = tmp_path / "run.yaml"
    path.write_text(text)
    return str(path)


def test_tagged_sections(tmp_path):
    path = _write(tmp_path, """
model: !sscan.network.ModelConfig
  bands: 191
  n_ssab: 4
train: !sscan.training.TrainConfig
  epochs: 20
""")
    model, train = load_run_config(path)
    assert isinstance(model, ModelConfig) and model.n_ssab == 4
    assert isinstance(train, TrainConfig) and train.epochs == 20


def test_plain_sections(tmp_path, monkeypatch):
    monkeypatch.setenv("SSCAN_EPOCHS", "3")
    model, train = load_run_config(_write(tmp_path, "train:\n  epochs: ${SSCAN_EPOCHS}\n  sigma: 50\n"))
    assert model is None
    assert (train.epochs, train.sigma) == (3, 50.0)


def test_empty_file(tmp_path):
    assert load_run_config(_write(tmp_path, "")) == (None, None)


@pytest.mark.parametrize("text, field", [
    ("- 1\n- 2\n", "run"),
    ("optimizer:\n  lr: 1\n", "run"),
    ("model: 5\n", "model"),
    ("model:\n  k: 4\n", "model"),
    ("train:\n  learning_rate: 1\n", "train"),
    ("train:\n  epochs: -2\n", "epochs"),
])
def test_invalid_run_files(tmp_path, text, field):
    with pytest.raises(ConfigError) as e:
        load_run_config(_write(tmp_path, text))
    assert e.value.field == field


def test_run_config_log(caplog):
    caplog.set_level(logging.INFO)
    RunConfig(subcommand="simulate-noise", paths={"input": "a.hsic"}, noise=NoiseSpec(sigma_8bit=25, seed=4)).log()
    assert "resolved run configuration" in caplog.text
    assert '"sigma_8bit":25.0' in caplog.text
