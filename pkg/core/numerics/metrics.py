# core/numerics/metrics.py - PSNR / SSIM
import math

import numpy as np
import torch
from skimage.metrics import peak_signal_noise_ratio, structural_similarity

from ..errors import DomainError, ShapeMismatchError
from .grid import check_same_shape

# Значение PSNR при нулевой MSE
PSNR_INF = math.inf

# Стандартные параметры SSIM (окно 11x11, гауссово, sigma=1.5)
SSIM_SIGMA = 1.5
SSIM_WINDOW = 11
SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_DATA_RANGE = 1.0


def _to_numpy(t) -> np.ndarray:
    if isinstance(t, torch.Tensor):
        return t.detach().cpu().numpy().astype(np.float64, copy=False)
    return np.asarray(t, dtype=np.float64)


def psnr(x: torch.Tensor, ref: torch.Tensor, peak: float = 1.0) -> float:
    """10*log10(peak^2 / MSE); returns PSNR_INF when x == ref."""
    check_same_shape(x, ref, 'image and reference')
    if peak <= 0:
        raise DomainError(f'PSNR peak must be positive, got {peak}')
    xa, ra = _to_numpy(x), _to_numpy(ref)
    if np.array_equal(xa, ra):
        return PSNR_INF
    return float(peak_signal_noise_ratio(ra, xa, data_range=peak))


def ssim(x: torch.Tensor, ref: torch.Tensor) -> float:
    """Single-channel SSIM, symmetric in its arguments."""
    check_same_shape(x, ref, 'image and reference')
    xa, ra = _to_numpy(x), _to_numpy(ref)
    if xa.ndim == 3:
        if xa.shape[0] != 1:
            raise ShapeMismatchError(f'SSIM expects a single channel, got {xa.shape[0]}')
        xa, ra = xa[0], ra[0]
    if min(xa.shape) < SSIM_WINDOW:
        raise ShapeMismatchError(
            f'Image {xa.shape} is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window'
        )
    return float(
        structural_similarity(
            xa,
            ra,
            data_range=SSIM_DATA_RANGE,
            gaussian_weights=True,
            sigma=SSIM_SIGMA,
            use_sample_covariance=False,
            K1=SSIM_K1,
            K2=SSIM_K2,
        )
    )


def safe_ssim(x: torch.Tensor, ref: torch.Tensor) -> float:
    """SSIM для отчётов; NaN, если изображение меньше окна"""
    if min(x.shape[-2:]) < SSIM_WINDOW:
        return math.nan
    return ssim(x, ref)
