import logging
import math
from pathlib import Path
from typing import List

import torch

from ..errors import DomainError
from ..numerics.grid import SeededRng
from ..numerics.io import PathLike, ensure_run_dir, read_pgm, write_pgm

logger = logging.getLogger(__name__)


class DatasetService:
    """Синтетические наборы изображений вместо реальных датасетов"""

    KINDS = ('piecewise-constant', 'smooth-bump', 'shepp-like-phantom')
    MIN_SIZE = 8
    MAX_LEVELS = 6
    FILE_PATTERN = 'img_{:04d}.pgm'

    # (центр x, центр y, полуось a, полуось b, угол, интенсивность) в единицах [-1, 1]
    PHANTOM_ELLIPSES = (
        (0.0, 0.0, 0.69, 0.92, 0.0, 1.0),
        (0.0, -0.0184, 0.6624, 0.874, 0.0, -0.8),
        (0.22, 0.0, 0.11, 0.31, -18.0, -0.2),
        (-0.22, 0.0, 0.16, 0.41, 18.0, -0.2),
        (0.0, 0.35, 0.21, 0.25, 0.0, 0.1),
        (0.0, 0.1, 0.046, 0.046, 0.0, 0.1),
        (-0.08, -0.605, 0.046, 0.023, 0.0, 0.1),
        (0.06, -0.605, 0.023, 0.046, 0.0, 0.1),
    )

    # ------------------- Генераторы -------------------

    @staticmethod
    def _quantize(img: torch.Tensor) -> torch.Tensor:
        """Значения кратны 1/255: запись в PGM и чтение не меняют изображение"""
        return torch.round(img.clamp(0.0, 1.0) * 255.0) / 255.0

    def piecewise_constant(self, size: int, rng: SeededRng) -> torch.Tensor:
        n_levels = rng.integers(2, self.MAX_LEVELS + 1)
        levels = [rng.integers(0, 256) / 255.0 for _ in range(n_levels)]
        img = torch.full((size, size), levels[0])
        for level in levels[1:]:
            for _ in range(rng.integers(1, 3)):
                r0, c0 = rng.integers(0, size - 1), rng.integers(0, size - 1)
                h, w = rng.integers(2, size // 2 + 1), rng.integers(2, size // 2 + 1)
                img[r0 : r0 + h, c0 : c0 + w] = level
        return img.unsqueeze(0)

    def smooth_bump(self, size: int, rng: SeededRng) -> torch.Tensor:
        coords = torch.linspace(0.0, 1.0, size)
        yy, xx = torch.meshgrid(coords, coords, indexing='ij')
        img = torch.zeros(size, size)
        for _ in range(rng.integers(1, 4)):
            cy, cx = (float(v) for v in rng.uniform((2,), 0.2, 0.8))
            width = float(rng.uniform((1,), 0.08, 0.25)[0])
            amp = float(rng.uniform((1,), 0.4, 1.0)[0])
            img += amp * torch.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * width**2))
        return self._quantize(img / max(1.0, float(img.max()))).unsqueeze(0)

    def shepp_like_phantom(self, size: int, rng: SeededRng) -> torch.Tensor:
        coords = torch.linspace(-1.0, 1.0, size)
        yy, xx = torch.meshgrid(coords, coords, indexing='ij')
        img = torch.zeros(size, size)
        jitter = rng.uniform((len(self.PHANTOM_ELLIPSES), 3), -0.05, 0.05)
        for (cx, cy, a, b, angle, value), (dx, dy, ds) in zip(self.PHANTOM_ELLIPSES, jitter.tolist()):
            theta = math.radians(angle)
            u = (xx - cx - dx) * math.cos(theta) + (yy - cy - dy) * math.sin(theta)
            v = -(xx - cx - dx) * math.sin(theta) + (yy - cy - dy) * math.cos(theta)
            inside = (u / (a * (1 + ds))) ** 2 + (v / (b * (1 + ds))) ** 2 <= 1.0
            img[inside] += value
        return self._quantize(img).unsqueeze(0)

    def generate(self, kind: str, count: int, size: int, seed: int) -> List[torch.Tensor]:
        if kind not in self.KINDS:
            raise DomainError(f'unknown generator {kind!r}; expected one of {self.KINDS}')
        if size < self.MIN_SIZE:
            raise DomainError(f'image size must be >= {self.MIN_SIZE}, got {size}')
        if count < 0:
            raise DomainError(f'image count must be nonnegative, got {count}')
        make = getattr(self, kind.replace('-', '_'))
        base = SeededRng(seed)
        return [make(size, base.spawn(i)) for i in range(count)]

    # ------------------- Диск -------------------

    def gen_data(self, kind: str, count: int, size: int, seed: int, out_dir: PathLike) -> List[Path]:
        """PGM-набор в out_dir; одинаковый seed даёт побайтно одинаковые файлы"""
        images = self.generate(kind, count, size, seed)
        root = ensure_run_dir(out_dir)
        paths = []
        for i, img in enumerate(images):
            path = root / self.FILE_PATTERN.format(i)
            write_pgm(path, img)
            paths.append(path)
        logger.info(f'Generated {count} {kind} images ({size}x{size}) in {root}')
        return paths

    @staticmethod
    def load_images(directory: PathLike) -> List[torch.Tensor]:
        root = Path(directory)
        if not root.is_dir():
            raise DomainError(f'dataset directory not found: {root}')
        return [read_pgm(p) for p in sorted(root.glob('*.pgm'))]
