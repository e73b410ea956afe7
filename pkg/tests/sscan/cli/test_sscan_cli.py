import logging
import os

import numpy as np
import pytest

from sscan.autodiff.functional import ReLU
from sscan.cli.sscan_cli import PREPARED_TEST_CLEAN, PREPARED_TEST_NOISY, PREPARED_TRAIN, build_parser, main
from sscan.hsi import HsiCube, NoiseSpec, add_gaussian_noise, load_cube
from sscan.network import load_checkpoint
from sscan.training import BEST_CHECKPOINT, LAST_CHECKPOINT, TRAIN_LOG
from tests.sscan import random_cube, write_cube

SMALL_MODEL = ["--k", "4", "--overlap", "2", "--n-ssab", "1", "--channels", "8", "--group-channels", "4"]
QUICK_TRAIN = ["--epochs", "1", "--batch", "2", "--patch", "8", "--patches", "2", "--tile", "64", "--margin", "8"]


@pytest.fixture(autouse=True)
def restore_log_level():
    root = logging.getLogger()
    level = root.level
    yield
    root.setLevel(level)


@pytest.fixture
def test_pair(tmp_path):
    clean = random_cube(16, 16, 6, seed=2)
    noisy = add_gaussian_noise(clean, NoiseSpec(sigma_8bit=25, seed=3))
    return write_cube(tmp_path, "clean.hsic", clean), write_cube(tmp_path, "noisy.hsic", noisy)


def test_simulate_noise(tmp_path, capsys):
    clean = write_cube(tmp_path, "clean.hsic", random_cube(200, 200, 32, seed=1))
    out = str(tmp_path / "noisy.hsic")
    report = str(tmp_path / "noisy.txt")
    assert main(["simulate-noise", "--input", clean, "--output", out, "--sigma", "5", "--report", report]) == 0
    line = capsys.readouterr().out.strip()
    mpsnr = float(line.split()[0].split("=")[1])
    assert mpsnr == pytest.approx(34.15, abs=0.1)
    with open(report) as stream:
        assert stream.readline().startswith("mpsnr: ")


def test_simulate_noise_is_deterministic(tmp_path):
    clean = write_cube(tmp_path, "clean.hsic", random_cube(12, 12, 4))
    first, second = str(tmp_path / "a.hsic"), str(tmp_path / "b.hsic")
    assert main(["simulate-noise", "-q", "--input", clean, "--output", first, "--seed", "9"]) == 0
    assert main(["simulate-noise", "-q", "--input", clean, "--output", second, "--seed", "9"]) == 0
    with open(first, "rb") as a, open(second, "rb") as b:
        assert a.read() == b.read()


def test_zero_sigma_copies_the_cube(tmp_path):
    clean = write_cube(tmp_path, "clean.hsic", random_cube(12, 12, 4))
    out = str(tmp_path / "copy.hsic")
    assert main(["simulate-noise", "--input", clean, "--output", out, "--sigma", "0"]) == 0
    with open(clean, "rb") as a, open(out, "rb") as b:
        assert a.read() == b.read()


def test_evaluate_identical_cubes(tmp_path, test_pair, capsys):
    clean, _ = test_pair
    report = str(tmp_path / "report.txt")
    assert main(["evaluate", "--clean", clean, "--input", clean, "--report", report]) == 0
    assert capsys.readouterr().out.strip() == "MPSNR=inf MSSIM=1.0000 SAM=0.0000 ERGAS=0.0000"
    with open(report) as stream:
        lines = stream.read().splitlines()
    assert lines[0] == "MPSNR=inf MSSIM=1.0000 SAM=0.0000 ERGAS=0.0000"
    assert lines[1] == "mpsnr: inf"


def test_bad_cube_is_an_io_error(tmp_path, test_pair):
    clean, _ = test_pair
    bad = tmp_path / "bad.hsic"
    bad.write_bytes(b"NOTACUBE" + bytes(32))
    assert main(["evaluate", "--clean", clean, "--input", str(bad)]) == 3
    assert main(["evaluate", "--clean", clean, "--input", str(tmp_path / "missing.hsic")]) == 3


def test_mismatched_cubes_are_invalid_input(tmp_path, test_pair):
    clean, _ = test_pair
    other = write_cube(tmp_path, "other.hsic", random_cube(16, 16, 5))
    assert main(["evaluate", "--clean", clean, "--input", other]) == 5


def test_error_map(tmp_path, test_pair, capsys):
    clean, noisy = test_pair
    out = str(tmp_path / "error.pgm")
    assert main(["error-map", "--clean", clean, "--input", noisy, "--output", out, "--bands", "0", "2", "5"]) == 0
    assert capsys.readouterr().out.startswith("max_error=")
    with open(out, "rb") as stream:
        assert stream.read(3) == b"P5\n"


def test_band_out_of_range(tmp_path, test_pair):
    clean, noisy = test_pair
    out = str(tmp_path / "error.pgm")
    assert main(["error-map", "--clean", clean, "--input", noisy, "--output", out]) == 5
    assert not os.path.exists(out)


def test_false_color(tmp_path, test_pair):
    _, noisy = test_pair
    out = str(tmp_path / "scene.ppm")
    assert main(["false-color", "--input", noisy, "--output", out, "--bands", "5", "3", "1"]) == 0
    with open(out, "rb") as stream:
        assert stream.read().startswith(b"P6\n# bands=5,3,1\n16 16\n255\n")


def test_gradcheck_single_operation(capsys):
    assert main(["gradcheck", "--ops", "conv2d"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 3
    assert all(line.split()[0] == "ok" and line.split()[1].startswith("conv2d[") for line in lines)


def test_gradcheck_reports_a_broken_rule(monkeypatch, capsys):
    monkeypatch.setattr(ReLU, "backward", lambda self, grad: (2.0 * grad * self.mask,))
    assert main(["gradcheck", "--ops", "relu"]) == 4
    assert "FAIL relu[x]" in capsys.readouterr().out


def test_gradcheck_rejects_unknown_operations():
    with pytest.raises(SystemExit) as e:
        main(["gradcheck", "--ops", "softmax"])
    assert e.value.code == 2


def test_verbose_and_quiet_are_exclusive():
    with pytest.raises(SystemExit) as e:
        main(["evaluate", "-v", "-q", "--clean", "a", "--input", "b"])
    assert e.value.code == 2


def test_train_zero_epochs(tmp_path, test_pair, capsys):
    clean, noisy = test_pair
    train = write_cube(tmp_path, "train.hsic", random_cube(24, 24, 6, seed=1))
    assert main(["train", "--input", train, "--clean", clean, "--noisy", noisy, "--epochs", "0"] + SMALL_MODEL) == 0
    assert capsys.readouterr().out.splitlines() == ["epochs: 0"]


def test_train_then_denoise(tmp_path, test_pair, capsys):
    clean, noisy = test_pair
    train = write_cube(tmp_path, "train.hsic", random_cube(24, 24, 6, seed=1))
    run_dir = str(tmp_path / "run")
    assert main(["train", "--input", train, "--clean", clean, "--noisy", noisy, "--checkpoint", run_dir]
                + SMALL_MODEL + QUICK_TRAIN) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "epochs: 1"
    assert out[1].startswith("noisy:  MPSNR=") and out[2].startswith("best:   MPSNR=")
    assert out[2].endswith("(epoch 1)")
    assert out[3].startswith("gain:   ") and out[3].endswith(" dB")
    for name in (TRAIN_LOG, BEST_CHECKPOINT, LAST_CHECKPOINT):
        assert os.path.exists(os.path.join(run_dir, name))
    model = load_checkpoint(os.path.join(run_dir, BEST_CHECKPOINT))
    assert (model.config.bands, model.config.trunk_channels, model.config.n_ssab) == (6, 8, 1)

    denoised = str(tmp_path / "denoised.hsic")
    assert main(["denoise", "--checkpoint", os.path.join(run_dir, BEST_CHECKPOINT), "--input", noisy,
                 "--output", denoised, "--tile", "8", "--margin", "2"]) == 0
    assert load_cube(denoised).shape == load_cube(noisy).shape


def test_train_with_a_run_file(tmp_path, test_pair, capsys):
    clean, noisy = test_pair
    train = write_cube(tmp_path, "train.hsic", random_cube(24, 24, 6, seed=1))
    run_file = tmp_path / "run.yaml"
    run_file.write_text(
        "model:\n"
        "  bands: 6\n"
        "  k: 3\n"
        "  o: 1\n"
        "  n_ssab: 1\n"
        "  trunk_channels: 8\n"
        "  group_channels: 4\n"
        "train: !sscan.training.TrainConfig\n"
        "  epochs: 1\n"
        "  batch_size: 2\n"
        "  patch_size: 8\n"
        "  patches_per_epoch: 2\n"
        "  tile: 64\n"
        "  margin: 8\n"
        f"  checkpoint_dir: {tmp_path / 'from-file'}\n")
    assert main(["train", "--input", train, "--clean", clean, "--noisy", noisy, "--config", str(run_file)]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "epochs: 1"
    model = load_checkpoint(str(tmp_path / "from-file" / LAST_CHECKPOINT))
    assert (model.config.k, model.config.o) == (3, 1)


def test_run_file_band_mismatch(tmp_path, test_pair):
    clean, noisy = test_pair
    train = write_cube(tmp_path, "train.hsic", random_cube(24, 24, 6, seed=1))
    run_file = tmp_path / "run.yaml"
    run_file.write_text("model:\n  bands: 7\n")
    assert main(["train", "--input", train, "--clean", clean, "--noisy", noisy, "--config", str(run_file),
                 "--epochs", "0"]) == 5


def test_prepare(tmp_path, capsys, caplog):
    raw = HsiCube(np.random.default_rng(0).random((6, 40, 20)) * 1000.0 + 50.0)
    source = write_cube(tmp_path, "raw.hsic", raw)
    out_dir = str(tmp_path / "prepared")
    assert main(["prepare", "--input", source, "--output", out_dir, "--train-rows", "24"]) == 0
    printed = capsys.readouterr().out.splitlines()
    assert printed[0].endswith(f"{PREPARED_TRAIN}: 24×20×6")
    assert printed[1].endswith(f"{PREPARED_TEST_CLEAN}: 16×20×6")
    train = load_cube(os.path.join(out_dir, PREPARED_TRAIN))
    assert train.band_scale is not None
    assert train.data.min() >= 0.0 and train.data.max() <= 1.0
    noisy = load_cube(os.path.join(out_dir, PREPARED_TEST_NOISY))
    assert not np.array_equal(noisy.data, load_cube(os.path.join(out_dir, PREPARED_TEST_CLEAN)).data)

    assert main(["prepare", "--input", source, "--output", out_dir, "--train-rows", "24",
                 "--crop", "2", "10", "12", "12"]) == 0
    assert load_cube(os.path.join(out_dir, PREPARED_TEST_CLEAN)).shape == (12, 12, 6)
    assert "inside the 24 training rows" in caplog.text


def test_prepare_seeds_the_noisy_test_cube_from_the_run_file(tmp_path):
    source = write_cube(tmp_path, "raw.hsic", HsiCube(np.random.default_rng(0).random((4, 30, 12)) + 0.5))
    run_file = tmp_path / "run.yaml"
    run_file.write_text("train: !sscan.training.TrainConfig\n  test_noise_seed: 5\n")

    def prepared_pair(out_dir, *flags):
        assert main(["prepare", "--input", source, "--output", str(out_dir), "--train-rows", "20", *flags]) == 0
        return (load_cube(str(out_dir / PREPARED_TEST_CLEAN)), load_cube(str(out_dir / PREPARED_TEST_NOISY)))

    clean, noisy = prepared_pair(tmp_path / "from-file", "--config", str(run_file))
    assert np.array_equal(noisy.data, add_gaussian_noise(clean, NoiseSpec(sigma_8bit=25, seed=5)).data)

    clean, noisy = prepared_pair(tmp_path / "flag-wins", "--config", str(run_file), "--seed", "9")
    assert np.array_equal(noisy.data, add_gaussian_noise(clean, NoiseSpec(sigma_8bit=25, seed=9)).data)

    clean, noisy = prepared_pair(tmp_path / "default")
    assert np.array_equal(noisy.data, add_gaussian_noise(clean, NoiseSpec(sigma_8bit=25, seed=2)).data)


def test_baseline(tmp_path, capsys):
    clean = write_cube(tmp_path, "clean.hsic", random_cube(16, 16, 3))
    assert main(["baseline", "--clean", clean, "--sigmas", "5", "50"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert [line.split()[0] for line in lines] == ["sigma=5", "sigma=50"]


def test_train_help_lists_defaults(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args(["train", "--help"])
    text = capsys.readouterr().out
    assert "(default: 100)" in text and "--checkpoint" in text
