import numpy as np
import pytest

from sscan.errors import ConfigError
from sscan.hsi import NoiseSpec, add_gaussian_noise
from sscan.metrics import encode_pgm, error_map, false_color, stretch, write_error_map, write_false_color
from tests.sscan import random_cube


def _read_pgm(path):
    with open(path, "rb") as stream:
        raw = stream.read()
    lines = raw.split(b"\n", 4)
    assert lines[0] == b"P5"
    width, height = (int(v) for v in lines[2].split())
    assert lines[3] == b"255"
    return lines[1].decode("ascii"), np.frombuffer(lines[4], dtype=np.uint8).reshape(height, width)


def test_identical_cubes_give_a_black_map(tmp_path):
    cube = random_cube(10, 12, 60)
    path = str(tmp_path / "error.pgm")
    assert write_error_map(cube, cube, path) == 0.0
    comment, pixels = _read_pgm(path)
    assert comment == "# max_error=0"
    assert pixels.shape == (10, 12)
    assert not pixels.any()


def test_single_pixel_error(tmp_path):
    clean = random_cube(8, 9, 60)
    data = clean.data.copy()
    data[27, 3, 5] += 0.3
    path = str(tmp_path / "error.pgm")
    anchor = write_error_map(clean, clean.with_data(data), path)
    assert anchor == pytest.approx(0.1)
    _, pixels = _read_pgm(path)
    assert pixels[3, 5] == 255
    pixels = pixels.copy()
    pixels[3, 5] = 0
    assert not pixels.any()


def test_fixed_anchor_saturates():
    raw, anchor = encode_pgm(np.array([[0.0, 0.5], [1.0, 2.0]]), max_error=1.0)
    assert anchor == 1.0
    assert raw.startswith(b"P5\n# max_error=1\n2 2\n255\n")
    assert list(raw[-4:]) == [0, 128, 255, 255]


def test_noise_error_map_has_no_structure():
    clean = random_cube(64, 64, 60, seed=2)
    noisy = add_gaussian_noise(clean, NoiseSpec(sigma_8bit=50, seed=3))
    errors = error_map(clean, noisy)
    quadrants = [errors[:32, :32], errors[:32, 32:], errors[32:, :32], errors[32:, 32:]]
    means = [q.mean() for q in quadrants]
    assert max(means) / min(means) < 1.1


def test_band_indices_are_checked():
    cube = random_cube(4, 4, 10)
    with pytest.raises(ConfigError):
        error_map(cube, cube, (1, 2, 10))
    with pytest.raises(ConfigError):
        error_map(cube, cube, (1, 2))


def test_stretch_clips_the_tails():
    channel = np.arange(100.0)
    stretched = stretch(channel)
    assert stretched.min() == 0.0 and stretched.max() == 1.0
    assert np.array_equal(stretch(np.full(5, 3.0)), np.zeros(5))


def test_false_color(tmp_path):
    cube = random_cube(6, 5, 60)
    rgb = false_color(cube)
    assert rgb.shape == (6, 5, 3) and rgb.dtype == np.uint8
    path = str(tmp_path / "scene.ppm")
    write_false_color(cube, path)
    with open(path, "rb") as stream:
        raw = stream.read()
    assert raw.startswith(b"P6\n# bands=57,27,17\n5 6\n255\n")
    assert raw.endswith(rgb.tobytes())
