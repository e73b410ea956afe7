# This is the __init__.py file for the sscan.metrics package

from .quality import (MetricsReport, band_psnr, ergas, evaluate_pair, gaussian_profile, gaussian_window, mpsnr, mssim, noisy_baseline,
                      sam, spectral_angles, ssim_maps)
from .images import encode_pgm, error_map, false_color, stretch, write_error_map, write_false_color

__all__ = ['MetricsReport', 'mpsnr', 'band_psnr', 'mssim', 'ssim_maps', 'gaussian_window', 'gaussian_profile', 'sam', 'spectral_angles',
           'ergas', 'evaluate_pair', 'noisy_baseline',
           'error_map', 'encode_pgm', 'write_error_map', 'false_color', 'stretch', 'write_false_color']
