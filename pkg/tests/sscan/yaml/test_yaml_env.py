import pytest
import yaml

from sscan.yaml import SscanLoader, load_yaml_file

run_with_defaults = """
paths:
    input: ${DATA_DIR:data}/dc.hsic
    checkpoint_dir: ${RUN_DIR:runs}/${RUN_NAME:baseline}
sigmas:
- ${LOW_SIGMA:5}
- ${HIGH_SIGMA:75}
"""


def test_yaml_env_var_not_set():
    document = """
    train:
        checkpoint_dir: ${SSCAN_RUN_DIR}
    """
    with pytest.raises(ValueError):
        yaml.load(document, SscanLoader)


def test_yaml_env_var_set(monkeypatch):
    document = """
    train:
        checkpoint_dir: ${RUN_DIR}
        tag: sigma-${SIGMA}-k${K}
    """
    monkeypatch.setenv("RUN_DIR", "/scratch/run")
    monkeypatch.setenv("SIGMA", "25")
    monkeypatch.setenv("K", "4")
    values = yaml.load(document, SscanLoader)["train"]
    assert values["checkpoint_dir"] == "/scratch/run"
    assert values["tag"] == "sigma-25-k4"


def test_yaml_with_defaults_no_env_vars_set():
    values = yaml.load(run_with_defaults, SscanLoader)
    assert values["paths"]["input"] == "data/dc.hsic"
    assert values["paths"]["checkpoint_dir"] == "runs/baseline"
    assert values["sigmas"] == [5, 75]


def test_yaml_with_defaults_env_vars_set(monkeypatch):
    monkeypatch.setenv("DATA_DIR", "/data")
    monkeypatch.setenv("RUN_NAME", "k6")
    monkeypatch.setenv("HIGH_SIGMA", "50.5")
    values = yaml.load(run_with_defaults, SscanLoader)
    assert values["paths"]["input"] == "/data/dc.hsic"
    assert values["paths"]["checkpoint_dir"] == "runs/k6"
    assert values["sigmas"] == [5, 50.5]
    assert type(values["sigmas"][1]) == float


def test_data_types_when_replaced_by_env_var(monkeypatch):
    document = """
    train:
        epochs: ${EPOCHS}
        initial_lr: ${LR}
        ssab_trunk: ${TRUNK}
        clip_norm: ${CLIP}
        name: ${NAME}
        label: run ${EPOCHS} ${TRUNK}
    """
    monkeypatch.setenv("EPOCHS", "100")
    monkeypatch.setenv("LR", "1e-4")
    monkeypatch.setenv("TRUNK", "False")
    monkeypatch.setenv("CLIP", "null")
    monkeypatch.setenv("NAME", "dc mall")
    values = yaml.load(document, SscanLoader)["train"]
    assert values["epochs"] == 100 and type(values["epochs"]) == int
    assert values["initial_lr"] == 1e-4 and type(values["initial_lr"]) == float
    assert values["ssab_trunk"] is False
    assert values["clip_norm"] is None
    assert values["name"] == "dc mall"
    assert values["label"] == "run 100 False"


def test_malformed_reference():
    with pytest.raises(ValueError):
        yaml.load("value: ${A:b:c}", SscanLoader)


def test_load_yaml_file(tmp_path, monkeypatch):
    monkeypatch.setenv("EPOCHS", "3")
    path = tmp_path / "run.yaml"
    path.write_text("train:\n  epochs: ${EPOCHS}\n")
    assert load_yaml_file(str(path)) == {"train": {"epochs": 3}}
