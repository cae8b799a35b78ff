# core/models/masks.py - Маски выборки
import logging
from typing import Sequence, Tuple

import torch

from ..errors import DomainError
from ..numerics.grid import SeededRng

logger = logging.getLogger(__name__)

MASK_KINDS = ('random-pixel', 'cartesian-lines')


def center_band_width(width: int) -> int:
    """Число полностью измеренных центральных столбцов k-пространства"""
    return min(width, max(4, width // 32))


def random_pixel_mask(shape: Sequence[int], keep_prob: float, rng: SeededRng) -> torch.Tensor:
    """Каждый пиксель сохраняется независимо с вероятностью p"""
    if not 0.0 < keep_prob <= 1.0:
        raise DomainError(f'keep probability must lie in (0, 1], got {keep_prob}')
    if keep_prob == 1.0:
        return torch.ones(tuple(shape))
    return (rng.uniform(shape) < keep_prob).to(torch.float64)


def cartesian_line_columns(width: int, acceleration: float) -> Tuple[int, ...]:
    """
    Индексы столбцов (в центрированной раскладке), сохраняемых маской xR.

    Центральная полоса max(4, W/32) столбцов плюс равномерно разнесённые
    столбцы из оставшихся, всего max(полоса, round(W/R)).
    """
    if acceleration < 1:
        raise DomainError(f'acceleration factor must be >= 1, got {acceleration}')
    band = center_band_width(width)
    start = width // 2 - band // 2
    center = list(range(start, start + band))
    total = max(band, int(round(width / acceleration)))
    remaining = [c for c in range(width) if c not in center]
    extra = min(total - band, len(remaining))
    picked = [remaining[(i * len(remaining)) // extra] for i in range(extra)] if extra else []
    return tuple(sorted(center + picked))


def cartesian_mask(shape: Sequence[int], acceleration: float) -> torch.Tensor:
    """
    Маска столбцов k-пространства в раскладке FFT (DC в [0, 0]).
    """
    h, w = int(shape[-2]), int(shape[-1])
    cols = cartesian_line_columns(w, acceleration)
    centered = torch.zeros(h, w)
    centered[:, list(cols)] = 1.0
    mask = torch.fft.ifftshift(centered, dim=(-2, -1))
    return mask.reshape(tuple(shape)) if len(shape) == 3 else mask


def generate_mask(kind: str, shape: Sequence[int], rng: SeededRng, **params) -> torch.Tensor:
    """
    kind='random-pixel' (keep_prob=p) или kind='cartesian-lines' (acceleration=R).
    """
    if kind == 'random-pixel':
        mask = random_pixel_mask(shape, params.get('keep_prob', 0.5), rng)
    elif kind == 'cartesian-lines':
        mask = cartesian_mask(shape, params.get('acceleration', 8))
    else:
        raise DomainError(f'Unknown mask kind {kind!r}; expected one of {MASK_KINDS}')
    logger.debug('Generated %s mask, kept fraction %.3f', kind, float(mask.mean()))
    return mask
