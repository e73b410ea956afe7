"""
Full-reference quality measures for denoised cubes: MPSNR, MSSIM, SAM and ERGAS. Cubes are
compared on the normalized [0, 1] scale.
"""
import logging
import math
from typing import Dict, Sequence, Tuple

import numpy as np
from pydantic import BaseModel
from scipy import signal

from sscan.constants import NOISE_SIGMAS, PEAK_VALUE, SSIM_K1, SSIM_K2, SSIM_SIGMA, SSIM_WINDOW
from sscan.errors import MetricError
from sscan.hsi.cube import HsiCube
from sscan.hsi.noise import NoiseSpec, add_gaussian_noise
from sscan.utils import derive_seed


class MetricsReport(BaseModel):
    """
    The four quality measures of one (reference, test) pair.

    Attributes:
        mpsnr (float): mean per-band PSNR in dB, +inf for identical cubes
        mssim (float): mean per-band SSIM
        sam (float): mean spectral angle in degrees
        ergas (float): relative dimensionless global error
        sam_skipped (int): pixels left out of SAM because a spectrum is all zero
        ergas_skipped (int): bands left out of ERGAS because their reference mean is zero
    """
    mpsnr: float
    mssim: float
    sam: float
    ergas: float
    sam_skipped: int = 0
    ergas_skipped: int = 0

    def format_line(self) -> str:
        """One line, four decimals: `MPSNR=… MSSIM=… SAM=… ERGAS=…`."""
        return (f"MPSNR={_format_value(self.mpsnr)} MSSIM={_format_value(self.mssim)} "
                f"SAM={_format_value(self.sam)} ERGAS={_format_value(self.ergas)}")

    def format_block(self) -> str:
        """Machine-readable `key: value` lines."""
        return "\n".join(f"{key}: {value if isinstance(value, int) else _format_value(value)}"
                         for key, value in self.model_dump().items()) + "\n"


def _format_value(value: float) -> str:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.4f}"


def paired_arrays(ref: HsiCube, test: HsiCube) -> Tuple[np.ndarray, np.ndarray]:
    """The float64 values of two cubes of equal dimensions; MetricError otherwise."""
    if ref.shape != test.shape:
        raise MetricError(f"cube dimensions differ: reference {ref.shape} vs test {test.shape}")
    return ref.data.astype(np.float64), test.data.astype(np.float64)


def band_psnr(ref: HsiCube, test: HsiCube) -> np.ndarray:
    """Per-band PSNR with peak 1.0; +inf where a band is reproduced exactly."""
    r, t = paired_arrays(ref, test)
    mse = np.mean((r - t) ** 2, axis=(1, 2))
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(PEAK_VALUE ** 2 / mse)


def mpsnr(ref: HsiCube, test: HsiCube) -> float:
    """
    Mean over bands of 10·log10(1 / MSE_b).

    Args:
        ref (HsiCube): the clean normalized cube
        test (HsiCube): the cube under evaluation

    Returns:
        float: decibels, +inf for identical cubes
    """
    return float(np.mean(band_psnr(ref, test)))


def gaussian_profile(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    """A normalized 1-D Gaussian of `size` taps."""
    axis = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    profile = np.exp(-(axis ** 2) / (2.0 * sigma ** 2))
    return profile / profile.sum()


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    """A normalized size × size Gaussian window, the outer product of two profiles."""
    profile = gaussian_profile(size, sigma)
    return np.outer(profile, profile)


def ssim_maps(ref: np.ndarray, test: np.ndarray, data_range: float = PEAK_VALUE) -> np.ndarray:
    """
    SSIM maps of band-sequential arrays, Gaussian-weighted local statistics over
    fully overlapping windows only (no padding).

    Returns:
        np.ndarray: bands × (H − 10) × (W − 10)
    """
    profile = gaussian_profile()
    rows, cols = profile[None, :, None], profile[None, None, :]

    def local_mean(values: np.ndarray) -> np.ndarray:
        # the window is separable: filter rows, then columns
        along_rows = signal.correlate(values, rows, mode="valid", method="direct")
        return signal.correlate(along_rows, cols, mode="valid", method="direct")

    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    mu_r, mu_t = local_mean(ref), local_mean(test)
    var_r = local_mean(ref * ref) - mu_r * mu_r
    var_t = local_mean(test * test) - mu_t * mu_t
    cov = local_mean(ref * test) - mu_r * mu_t
    return ((2.0 * mu_r * mu_t + c1) * (2.0 * cov + c2)) / ((mu_r ** 2 + mu_t ** 2 + c1) * (var_r + var_t + c2))


def mssim(ref: HsiCube, test: HsiCube) -> float:
    """
    Mean over bands of the SSIM (11×11 Gaussian window, σ 1.5, K1 0.01, K2 0.03, range 1).

    :raises MetricError: If the cubes differ in shape or are smaller than the window.
    """
    r, t = paired_arrays(ref, test)
    if ref.height < SSIM_WINDOW or ref.width < SSIM_WINDOW:
        raise MetricError(f"SSIM needs at least {SSIM_WINDOW}×{SSIM_WINDOW} pixels, got {ref.height}×{ref.width}")
    maps = ssim_maps(r, t)
    return float(np.mean(maps.mean(axis=(1, 2))))


def spectral_angles(ref: HsiCube, test: HsiCube) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-pixel spectral angle in degrees and the mask of pixels it is defined for.

    The angle is evaluated as 2·atan2(‖r̂ − t̂‖, ‖r̂ + t̂‖) on the unit spectra, which is exact
    for parallel spectra and well conditioned for small angles.

    Returns:
        Tuple[np.ndarray, np.ndarray]: H×W angles (0 where undefined) and the H×W validity mask
    """
    r, t = paired_arrays(ref, test)
    norm_r = np.sqrt(np.sum(r * r, axis=0))
    norm_t = np.sqrt(np.sum(t * t, axis=0))
    valid = (norm_r > 0) & (norm_t > 0)
    safe_r = np.where(valid, norm_r, 1.0)
    safe_t = np.where(valid, norm_t, 1.0)
    unit_r, unit_t = r / safe_r, t / safe_t
    difference = np.sqrt(np.sum((unit_r - unit_t) ** 2, axis=0))
    total = np.sqrt(np.sum((unit_r + unit_t) ** 2, axis=0))
    angles = np.degrees(2.0 * np.arctan2(difference, total))
    return np.where(valid, angles, 0.0), valid


def sam(ref: HsiCube, test: HsiCube) -> float:
    """
    Mean spectral angle over the pixels whose reference and test spectra are both nonzero.

    Returns:
        float: degrees

    :raises MetricError: If no pixel has two nonzero spectra.
    """
    return _sam_with_count(ref, test)[0]


def _sam_with_count(ref: HsiCube, test: HsiCube) -> Tuple[float, int]:
    angles, valid = spectral_angles(ref, test)
    skipped = int(valid.size - valid.sum())
    if skipped == valid.size:
        raise MetricError("SAM is undefined: every pixel has an all-zero spectrum")
    if skipped:
        logging.warning(f"SAM skipped {skipped} pixel(s) with an all-zero spectrum")
    return float(angles[valid].mean()), skipped


def ergas(ref: HsiCube, test: HsiCube) -> float:
    """
    100 · sqrt(mean_b (RMSE_b / mean_b)²) with resolution ratio 1, over the bands whose
    reference mean is nonzero.

    :raises MetricError: If every band has a zero reference mean.
    """
    return _ergas_with_count(ref, test)[0]


def _ergas_with_count(ref: HsiCube, test: HsiCube) -> Tuple[float, int]:
    r, t = paired_arrays(ref, test)
    means = r.mean(axis=(1, 2))
    rmse = np.sqrt(np.mean((r - t) ** 2, axis=(1, 2)))
    valid = means != 0
    skipped = int(valid.size - valid.sum())
    if skipped == valid.size:
        raise MetricError("ERGAS is undefined: every band has a zero reference mean")
    if skipped:
        logging.warning(f"ERGAS skipped {skipped} band(s) with a zero reference mean")
    return float(100.0 * np.sqrt(np.mean((rmse[valid] / means[valid]) ** 2))), skipped


def evaluate_pair(ref: HsiCube, test: HsiCube) -> MetricsReport:
    """
    All four measures of a (reference, test) pair.

    Args:
        ref (HsiCube): the clean normalized cube
        test (HsiCube): the noisy or denoised cube

    Returns:
        MetricsReport: the bundled measures
    """
    sam_value, sam_skipped = _sam_with_count(ref, test)
    ergas_value, ergas_skipped = _ergas_with_count(ref, test)
    report = MetricsReport(mpsnr=mpsnr(ref, test), mssim=mssim(ref, test), sam=sam_value, ergas=ergas_value,
                           sam_skipped=sam_skipped, ergas_skipped=ergas_skipped)
    logging.debug(f"evaluated pair: {report.format_line()}")
    return report


def noisy_baseline(clean: HsiCube, sigmas: Sequence[float] = NOISE_SIGMAS, seed: int = 0) -> Dict[float, MetricsReport]:
    """
    Quality of the clean cube corrupted by Gaussian noise at each level, without any denoising.

    Args:
        clean (HsiCube): a normalized cube
        sigmas (Sequence[float]): noise levels in 8-bit units
        seed (int): base seed; every level draws its own noise

    Returns:
        Dict[float, MetricsReport]: the report of each level
    """
    table = {}
    for index, sigma in enumerate(sigmas):
        noisy = add_gaussian_noise(clean, NoiseSpec(sigma_8bit=sigma, seed=derive_seed(seed, index)))
        table[float(sigma)] = evaluate_pair(clean, noisy)
    return table
