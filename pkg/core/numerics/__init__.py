from .grid import (
    SeededRng,
    as_grid_image,
    check_same_shape,
    dft2,
    ensure_finite,
    idft2,
)
from .metrics import PSNR_INF, psnr, safe_ssim, ssim

__all__ = [
    'PSNR_INF',
    'SeededRng',
    'as_grid_image',
    'check_same_shape',
    'dft2',
    'ensure_finite',
    'idft2',
    'psnr',
    'safe_ssim',
    'ssim',
]
