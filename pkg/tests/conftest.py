# tests/conftest.py
import math
import os
import sys
from pathlib import Path

import pytest
import torch

# Добавляем корневую директорию в PYTHONPATH
root_dir = Path(__file__).parent.parent
sys.path.insert(0, str(root_dir))

os.environ['TESTING'] = '1'

from core.models.fidelity import InpaintingModel, MaskedFourierModel, RicianModel
from core.models.masks import cartesian_mask, random_pixel_mask
from core.models.regularizer import GradStepRegularizer, SmoothPotentialNet
from core.numerics.grid import SeededRng


def naive_dft2(x: torch.Tensor) -> torch.Tensor:
    """O(n^2) унитарное ДПФ по определению"""
    h, w = x.shape[-2], x.shape[-1]
    rows = torch.arange(h, dtype=torch.float64)
    cols = torch.arange(w, dtype=torch.float64)
    fh = torch.exp(-2j * torch.pi * torch.outer(rows, rows) / h) / h**0.5
    fw = torch.exp(-2j * torch.pi * torch.outer(cols, cols) / w) / w**0.5
    return fh @ x.to(torch.complex128) @ fw.T


def naive_idft2(freq: torch.Tensor) -> torch.Tensor:
    h, w = freq.shape[-2], freq.shape[-1]
    rows = torch.arange(h, dtype=torch.float64)
    cols = torch.arange(w, dtype=torch.float64)
    fh = torch.exp(2j * torch.pi * torch.outer(rows, rows) / h) / h**0.5
    fw = torch.exp(2j * torch.pi * torch.outer(cols, cols) / w) / w**0.5
    return fh @ freq.to(torch.complex128) @ fw.T


def central_difference(fn, x: torch.Tensor, direction: torch.Tensor, h: float = 1e-5) -> float:
    return (float(fn(x + h * direction)) - float(fn(x - h * direction))) / (2 * h)


def unit_direction(rng: SeededRng, shape) -> torch.Tensor:
    d = rng.normal(shape)
    return d / torch.linalg.vector_norm(d)


CENTER_TAP = 4


def center_tap_net(channels, padding='zeros') -> SmoothPotentialNet:
    """Каждый слой - одиночный центральный отвод 1, смещения 0"""
    net = SmoothPotentialNet(channels, padding=padding, seed=None)
    flat = torch.zeros(net.num_parameters())
    offset = 0
    for _, shape in net.layout():
        if len(shape) == 4:
            flat[offset + CENTER_TAP] = 1.0
        offset += math.prod(shape)
    net.set_flat(flat)
    return net


# ------------------- FIXTURES -------------------


@pytest.fixture
def rng():
    return SeededRng(1234)


@pytest.fixture
def image(rng):
    """Случайное изображение 8x8 в [0, 1]"""
    return rng.uniform((1, 8, 8))


@pytest.fixture
def small_net():
    return SmoothPotentialNet(seed=7)


@pytest.fixture
def gradstep(small_net):
    return GradStepRegularizer(small_net, sigma=0.03)


@pytest.fixture
def noise_net():
    return SmoothPotentialNet(noise_channel=True, seed=11)


@pytest.fixture
def mri_model(rng):
    return MaskedFourierModel(cartesian_mask((1, 8, 8), 2.0), noise_level=0.01)


@pytest.fixture
def inpainting_model(rng):
    return InpaintingModel(random_pixel_mask((1, 8, 8), 0.5, SeededRng(5)), noise_level=0.01)


@pytest.fixture
def rician_model():
    return RicianModel(noise_level=0.1)


@pytest.fixture
def full_inpainting():
    """f = 1/2 ||x - y||^2"""
    return InpaintingModel(torch.ones(1, 8, 8), noise_level=0.0)
