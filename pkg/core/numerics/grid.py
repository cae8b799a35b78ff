"""
Dense 2D grids, the seeded RNG and the unitary DFT.

A GridImage is a float64 ``torch.Tensor`` of shape ``(channels, height, width)``;
a ComplexGrid is the complex128 counterpart. Plain 2D tensors are accepted and
promoted to a single channel.
"""

from typing import Any, Dict, Optional, Sequence, Union

import numpy as np
import torch

from ..errors import DivergenceError, DomainError, ShapeMismatchError

Shape = Sequence[int]


def as_grid_image(data: Union[torch.Tensor, np.ndarray, Sequence]) -> torch.Tensor:
    """Приведение к GridImage: float64, форма (C, H, W), все значения конечны."""
    t = torch.as_tensor(data)
    if t.is_complex():
        raise ShapeMismatchError('GridImage must be real-valued')
    t = t.to(torch.float64)
    if t.dim() == 2:
        t = t.unsqueeze(0)
    if t.dim() != 3 or min(t.shape) < 1:
        raise ShapeMismatchError(
            f'GridImage must have shape (C, H, W) with positive sizes, got {tuple(t.shape)}'
        )
    if not bool(torch.isfinite(t).all()):
        raise DomainError('GridImage entries must be finite')
    return t


def check_same_shape(a: torch.Tensor, b: torch.Tensor, what: str = 'operands') -> None:
    if tuple(a.shape) != tuple(b.shape):
        raise ShapeMismatchError(
            f'Shape mismatch between {what}: {tuple(a.shape)} vs {tuple(b.shape)}'
        )


def ensure_finite(t: torch.Tensor, what: str = 'iterate') -> None:
    if not bool(torch.isfinite(t).all()):
        raise DivergenceError(f'Non-finite entries in {what}')


def dft2(img: torch.Tensor) -> torch.Tensor:
    """Unitary 2D DFT over the last two axes, so that ||F x|| = ||x||."""
    if img.dim() < 2 or img.shape[-1] < 1 or img.shape[-2] < 1:
        raise ShapeMismatchError(f'dft2 needs a 2D grid, got {tuple(img.shape)}')
    if not img.is_complex():
        img = img.to(torch.float64)
    return torch.fft.fft2(img, norm='ortho')


def idft2(freq: torch.Tensor) -> torch.Tensor:
    if freq.dim() < 2 or freq.shape[-1] < 1 or freq.shape[-2] < 1:
        raise ShapeMismatchError(f'idft2 needs a 2D grid, got {tuple(freq.shape)}')
    if not freq.is_complex():
        freq = freq.to(torch.complex128)
    return torch.fft.ifft2(freq, norm='ortho')


class SeededRng:
    """
    PCG64 generator (numpy) returning float64 torch tensors.

    The same seed yields the same stream on every platform; Gaussian draws use
    numpy's ziggurat sampler. The bit-generator state round-trips through JSON.
    """

    ALGORITHM = 'PCG64'

    def __init__(self, seed: int = 0):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def normal(self, shape: Shape, std: float = 1.0) -> torch.Tensor:
        return torch.from_numpy(self._gen.standard_normal(tuple(shape)) * std)

    def uniform(self, shape: Shape, low: float = 0.0, high: float = 1.0) -> torch.Tensor:
        return torch.from_numpy(self._gen.uniform(low, high, tuple(shape)))

    def integers(self, low: int, high: int, size: Optional[Shape] = None):
        if size is None:
            return int(self._gen.integers(low, high))
        return self._gen.integers(low, high, tuple(size))

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def spawn(self, offset: int) -> 'SeededRng':
        """Независимый поток для экземпляра / потока исполнения."""
        return SeededRng(self.seed * 1_000_003 + int(offset))

    def get_state(self) -> Dict[str, Any]:
        return {'seed': self.seed, 'bit_generator': self._gen.bit_generator.state}

    def set_state(self, state: Dict[str, Any]) -> None:
        self.seed = int(state['seed'])
        self._gen.bit_generator.state = state['bit_generator']
