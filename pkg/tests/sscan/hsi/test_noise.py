import numpy as np
import pytest

from sscan.hsi import NoiseSpec, add_gaussian_noise, gaussian_noise
from sscan.metrics import mpsnr
from tests.sscan import random_cube


@pytest.mark.parametrize("sigma, expected", [(5, 34.15), (25, 20.17), (50, 14.15), (75, 10.63)])
def test_noisy_mpsnr_matches_the_noise_level(sigma, expected):
    clean = random_cube(200, 200, 32, seed=0)
    noisy = add_gaussian_noise(clean, NoiseSpec(sigma_8bit=sigma, seed=1))
    assert mpsnr(clean, noisy) == pytest.approx(expected, abs=0.1)


def test_empirical_deviation():
    clean = random_cube(200, 200, 191, seed=2)
    noisy = add_gaussian_noise(clean, NoiseSpec(sigma_8bit=50, seed=3))
    assert np.std(noisy.data - clean.data) == pytest.approx(50 / 255, rel=0.01)


def test_noise_is_not_clipped():
    clean = random_cube(64, 64, 4, seed=4)
    noisy = add_gaussian_noise(clean, NoiseSpec(sigma_8bit=75, seed=5))
    assert noisy.data.min() < 0.0
    assert noisy.data.max() > 1.0


def test_same_seed_same_noise():
    clean = random_cube(16, 16, 3)
    spec = NoiseSpec(sigma_8bit=25, seed=9)
    assert np.array_equal(add_gaussian_noise(clean, spec).data, add_gaussian_noise(clean, spec).data)
    other = add_gaussian_noise(clean, NoiseSpec(sigma_8bit=25, seed=10))
    assert not np.array_equal(add_gaussian_noise(clean, spec).data, other.data)


def test_zero_sigma_is_an_unchanged_copy():
    clean = random_cube(8, 8, 2)
    noisy = add_gaussian_noise(clean, NoiseSpec(sigma_8bit=0, seed=1))
    assert noisy.data.tobytes() == clean.data.tobytes()
    assert noisy.data is not clean.data
    assert np.array_equal(noisy.band_scale, clean.band_scale)


def test_noise_draw():
    draw = gaussian_noise((3, 4), NoiseSpec(sigma_8bit=255, seed=7))
    assert np.array_equal(draw, np.random.default_rng(7).standard_normal((3, 4)))


def test_negative_sigma_is_rejected():
    with pytest.raises(ValueError):
        NoiseSpec(sigma_8bit=-1)
