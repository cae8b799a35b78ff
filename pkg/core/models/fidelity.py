"""
Data-fidelity terms: masked-Fourier MRI, inpainting and Rician denoising.

All operate on GridImage tensors ``(C, H, W)``; the MRI measurement is a
complex grid of the same shape holding zeros outside the sampling mask.
"""

import logging

import torch

from ..errors import ShapeMismatchError
from ..numerics.grid import SeededRng, check_same_shape, dft2, idft2
from .base import DataFidelity
from .bessel import log_i0, signed_bessel_ratio

logger = logging.getLogger(__name__)


def _check_mask(mask: torch.Tensor) -> torch.Tensor:
    mask = torch.as_tensor(mask, dtype=torch.float64)
    if not bool(((mask == 0) | (mask == 1)).all()):
        raise ShapeMismatchError('mask entries must be 0 or 1')
    return mask if mask.dim() == 3 else mask.unsqueeze(0)


def hermitian_flip(grid: torch.Tensor) -> torch.Tensor:
    """k -> -k (mod N) по двум последним осям"""
    flipped = torch.flip(grid, dims=(-2, -1))
    return torch.roll(flipped, shifts=(1, 1), dims=(-2, -1))


# ------------------- MRI -------------------


class MaskedFourierModel(DataFidelity):
    """
    f(x, y) = 1/2 ||M F x - y||^2 с унитарным F, x вещественный (нулевая фаза).

    Для вещественного x оператор Re(F^H M F) диагонален в k-пространстве
    с симметризованной маской (M + M(-k)) / 2, через неё считаются
    градиент и prox.
    """

    name = 'mri'
    convex = True
    has_closed_prox = True
    lipschitz_grad = 1.0
    lipschitz_hessian = 0.0

    def __init__(self, mask: torch.Tensor, noise_level: float):
        super().__init__(noise_level)
        self.mask = _check_mask(mask)
        self.sym_mask = 0.5 * (self.mask + hermitian_flip(self.mask))

    def _check(self, x: torch.Tensor, y: torch.Tensor) -> None:
        check_same_shape(x, self.mask.expand_as(x), 'image and mask')
        if tuple(y.shape) != tuple(x.shape):
            raise ShapeMismatchError(
                f'k-space measurement shape {tuple(y.shape)} does not match image {tuple(x.shape)}'
            )

    def simulate(self, x_true: torch.Tensor, rng: SeededRng) -> torch.Tensor:
        kspace = dft2(x_true)
        if self.noise_level > 0:
            noise = torch.complex(
                rng.normal(x_true.shape, self.noise_level),
                rng.normal(x_true.shape, self.noise_level),
            )
            kspace = kspace + noise
        return self.mask * kspace

    def value(self, x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
        self._check(x, y)
        residual = self.mask * dft2(x) - y
        return 0.5 * (residual.abs() ** 2).sum()

    def grad(self, x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
        self._check(x, y)
        return idft2(self.mask * (self.mask * dft2(x) - y)).real

    def prox(self, x: torch.Tensor, y: torch.Tensor, tau) -> torch.Tensor:
        """argmin_u f(u) + ||u - x||^2 / (2 tau); деление покомпонентно в k-пространстве"""
        self._check(x, y)
        data = dft2(idft2(self.mask * y).real)
        return idft2((tau * data + dft2(x)) / (tau * self.sym_mask + 1.0)).real

    def adjoint_init(self, y: torch.Tensor) -> torch.Tensor:
        return idft2(self.mask * y).real


# ------------------- Inpainting -------------------


class InpaintingModel(DataFidelity):
    """f(x, y) = 1/2 ||M x - y||^2, M - бинарная маска пикселей"""

    name = 'inpainting'
    convex = True
    has_closed_prox = True
    lipschitz_grad = 1.0
    lipschitz_hessian = 0.0

    def __init__(self, mask: torch.Tensor, noise_level: float):
        super().__init__(noise_level)
        self.mask = _check_mask(mask)

    def _check(self, x: torch.Tensor, y: torch.Tensor) -> None:
        check_same_shape(x, y, 'image and measurement')
        check_same_shape(x, self.mask.expand_as(x), 'image and mask')

    def simulate(self, x_true: torch.Tensor, rng: SeededRng) -> torch.Tensor:
        y = x_true.clone()
        if self.noise_level > 0:
            y = y + rng.normal(x_true.shape, self.noise_level)
        return self.mask * y

    def value(self, x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
        self._check(x, y)
        return 0.5 * ((self.mask * x - y) ** 2).sum()

    def grad(self, x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
        self._check(x, y)
        return self.mask * (self.mask * x - y)

    def prox(self, x: torch.Tensor, y: torch.Tensor, tau) -> torch.Tensor:
        self._check(x, y)
        return (tau * self.mask * y + x) / (tau * self.mask + 1.0)


# ------------------- Rician -------------------


class RicianModel(DataFidelity):
    """
    Rician negative log-likelihood, summed over pixels:
    f(x, y) = sum x^2 / (2 s^2) - log I0(x y / s^2).

    Nonconvex; f'' = 1/s^2 - (y/s^2)^2 B'(t) <= 1/s^2 with B' >= 0, so the
    gradient is 1/s^2-Lipschitz. Pixels with y = 0 give log I0(0) = 0 exactly.
    """

    name = 'rician'
    convex = False
    has_closed_prox = False

    def __init__(self, noise_level: float):
        if noise_level <= 0:
            raise ValueError('Rician noise level must be positive')
        super().__init__(noise_level)
        self.lipschitz_grad = 1.0 / noise_level**2
        # |d^3 f| = (y/s^2)^3 |B''| ограничено при ограниченном y; точную константу не утверждаем
        self.lipschitz_hessian = None

    def simulate(self, x_true: torch.Tensor, rng: SeededRng) -> torch.Tensor:
        n_real = rng.normal(x_true.shape, self.noise_level)
        n_imag = rng.normal(x_true.shape, self.noise_level)
        return torch.sqrt((x_true + n_real) ** 2 + n_imag**2)

    def value(self, x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
        check_same_shape(x, y, 'image and measurement')
        s2 = self.noise_level**2
        return (x**2 / (2 * s2) - log_i0(x * y / s2)).sum()

    def grad(self, x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
        check_same_shape(x, y, 'image and measurement')
        s2 = self.noise_level**2
        return x / s2 - (y / s2) * signed_bessel_ratio(x * y / s2)


FIDELITY_MODELS = {
    'mri': MaskedFourierModel,
    'inpainting': InpaintingModel,
    'rician': RicianModel,
}
