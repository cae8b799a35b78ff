"""
Regularizers: the gradient-step potential g(x) = 1/2 ||x - N(x)||^2 over a small
SoftPlus convolutional network, plus analytic Tikhonov / smoothed-TV oracles.
"""

import logging
import math
from typing import Callable, List, Optional, Sequence, Tuple, Union

import torch
from torch import nn
from torch.nn.utils import parameters_to_vector, vector_to_parameters

from ..errors import DomainError, ShapeMismatchError
from ..numerics.grid import SeededRng, check_same_shape
from .base import Regularizer

logger = logging.getLogger(__name__)

PADDING_MODES = ('zeros', 'circular')
DEFAULT_CHANNELS = (1, 8, 8, 1)


class SmoothPotentialNet(nn.Module):
    """
    Свёрточная сеть N: 3x3 свёртки со stride 1 и паддингом 1,
    SoftPlus после каждого слоя, кроме последнего.

    При noise_channel=True ко входу добавляется постоянный канал со значением sigma.
    """

    def __init__(
        self,
        channels: Sequence[int] = DEFAULT_CHANNELS,
        noise_channel: bool = False,
        padding: str = 'zeros',
        seed: Optional[int] = 0,
    ):
        super().__init__()
        if len(channels) < 2 or min(channels) < 1:
            raise DomainError(f'channels must list at least two positive sizes, got {channels}')
        if padding not in PADDING_MODES:
            raise DomainError(f'padding must be one of {PADDING_MODES}, got {padding!r}')
        self.channels = tuple(int(c) for c in channels)
        self.noise_channel = bool(noise_channel)
        self.padding = padding

        in_sizes = list(self.channels[:-1])
        in_sizes[0] += int(self.noise_channel)
        self.layers = nn.ModuleList(
            nn.Conv2d(
                c_in, c_out, kernel_size=3, stride=1, padding=1,
                padding_mode=padding, dtype=torch.float64,
            )
            for c_in, c_out in zip(in_sizes, self.channels[1:])
        )
        if seed is not None:
            self.reset_parameters(SeededRng(seed))

    def reset_parameters(self, rng: SeededRng) -> None:
        """Равномерная инициализация U(-1/sqrt(fan_in), 1/sqrt(fan_in))"""
        with torch.no_grad():
            for layer in self.layers:
                fan_in = layer.in_channels * 9
                bound = 1.0 / math.sqrt(fan_in)
                layer.weight.copy_(rng.uniform(layer.weight.shape, -bound, bound))
                layer.bias.copy_(rng.uniform(layer.bias.shape, -bound, bound))

    def forward(self, x: torch.Tensor, sigma: Union[float, torch.Tensor] = 0.0) -> torch.Tensor:
        if x.dim() != 3 or x.shape[0] != self.channels[0]:
            raise ShapeMismatchError(
                f'expected input of shape ({self.channels[0]}, H, W), got {tuple(x.shape)}'
            )
        h = x.unsqueeze(0)
        if self.noise_channel:
            level = torch.as_tensor(sigma, dtype=x.dtype)
            h = torch.cat([h, level * torch.ones_like(h[:, :1])], dim=1)
        last = len(self.layers) - 1
        for i, layer in enumerate(self.layers):
            h = layer(h)
            if i < last:
                h = nn.functional.softplus(h)
        return h.squeeze(0)

    # ------------------- Плоский вектор параметров -------------------

    def layout(self) -> List[Tuple[str, Tuple[int, ...]]]:
        return [(name, tuple(p.shape)) for name, p in self.named_parameters()]

    def num_parameters(self) -> int:
        return sum(p.numel() for p in self.parameters())

    def get_flat(self) -> torch.Tensor:
        return parameters_to_vector(self.parameters()).detach().clone()

    def set_flat(self, flat: torch.Tensor) -> None:
        flat = torch.as_tensor(flat, dtype=torch.float64)
        if flat.numel() != self.num_parameters():
            raise ShapeMismatchError(
                f'parameter vector has {flat.numel()} entries, network needs {self.num_parameters()}'
            )
        with torch.no_grad():
            vector_to_parameters(flat.reshape(-1), self.parameters())


class GradStepRegularizer(Regularizer):
    """g(x) = 1/2 ||x - N(x, sigma)||^2; denoiser D = Id - grad g"""

    def __init__(self, net: SmoothPotentialNet, sigma: Union[float, torch.Tensor] = 0.0):
        self.net = net
        self.sigma = sigma

    def residual(self, x: torch.Tensor) -> torch.Tensor:
        return x - self.net(x, self.sigma)

    def g_value_and_grad(self, x: torch.Tensor, create_graph: bool = False):
        with torch.enable_grad():
            if create_graph and x.requires_grad:
                x_in = x
            else:
                x_in = x.detach().requires_grad_(True)
            r = self.residual(x_in)
            value = 0.5 * (r**2).sum()
            (grad,) = torch.autograd.grad(value, x_in, create_graph=create_graph)
        if not create_graph:
            return value.detach(), grad.detach()
        return value, grad

    def g_grad_param_contraction(
        self, x: torch.Tensor, u: torch.Tensor, with_sigma: bool = False
    ) -> Union[torch.Tensor, Tuple[torch.Tensor, torch.Tensor]]:
        """
        grad_theta <grad_x g(x), u> при фиксированных x, u (reverse-over-reverse).

        Возвращает плоский вектор в раскладке ``net.layout()``; при with_sigma
        дополнительно производную по sigma.
        """
        check_same_shape(x, u, 'image and cotangent')
        params = list(self.net.parameters())
        sigma = torch.as_tensor(self.sigma, dtype=torch.float64).detach().requires_grad_(True)
        saved, self.sigma = self.sigma, sigma
        try:
            with torch.enable_grad():
                grad = self.g_grad(x.detach(), create_graph=True)
                inner = (grad * u.detach()).sum()
                grads = torch.autograd.grad(inner, params + [sigma], allow_unused=True)
        finally:
            self.sigma = saved
        flat = torch.cat([
            (g if g is not None else torch.zeros_like(p)).reshape(-1)
            for g, p in zip(grads[:-1], params)
        ])
        if with_sigma:
            d_sigma = grads[-1] if grads[-1] is not None else torch.zeros(())
            return flat, d_sigma
        return flat

    def describe(self) -> dict:
        return {
            'kind': 'gradstep',
            'channels': list(self.net.channels),
            'noise_channel': self.net.noise_channel,
            'padding': self.net.padding,
            'sigma': float(self.sigma),
        }


class AnalyticRegularizer(Regularizer):
    """
    Tikhonov (mu/2)||x||^2 или периодический анизотропный сглаженный TV
    sum_d sum_pixels sqrt((D_d x)^2 + delta^2).
    """

    KINDS = ('tikhonov', 'smoothed-tv')

    def __init__(self, kind: str, mu: float = 1.0, delta: float = 0.1):
        if kind not in self.KINDS:
            raise DomainError(f'unknown analytic regularizer {kind!r}')
        if kind == 'smoothed-tv' and delta <= 0:
            raise DomainError(f'smoothed-TV needs delta > 0, got {delta}')
        if kind == 'tikhonov' and mu < 0:
            raise DomainError(f'Tikhonov weight must be nonnegative, got {mu}')
        self.kind = kind
        self.mu = float(mu)
        self.delta = float(delta)

    @classmethod
    def tikhonov(cls, mu: float = 1.0) -> 'AnalyticRegularizer':
        return cls('tikhonov', mu=mu)

    @classmethod
    def smoothed_tv(cls, delta: float) -> 'AnalyticRegularizer':
        return cls('smoothed-tv', delta=delta)

    @property
    def lipschitz_grad(self) -> float:
        # ||D_d||^2 <= 4 по каждой из двух осей, (sqrt(t^2+d^2))'' <= 1/d
        return self.mu if self.kind == 'tikhonov' else 8.0 / self.delta

    @property
    def weak_convexity(self) -> float:
        return 0.0

    def g_value_and_grad(self, x: torch.Tensor, create_graph: bool = False):
        if self.kind == 'tikhonov':
            return 0.5 * self.mu * (x**2).sum(), self.mu * x
        value = torch.zeros((), dtype=x.dtype)
        grad = torch.zeros_like(x)
        for axis in (-2, -1):
            diff = torch.roll(x, shifts=-1, dims=axis) - x
            mag = torch.sqrt(diff**2 + self.delta**2)
            value = value + mag.sum()
            w = diff / mag
            # D^T w
            grad = grad + torch.roll(w, shifts=1, dims=axis) - w
        return value, grad

    def describe(self) -> dict:
        if self.kind == 'tikhonov':
            return {'kind': 'tikhonov', 'mu': self.mu}
        return {'kind': 'smoothed-tv', 'delta': self.delta}


def estimate_lipschitz(
    grad_fn: Callable[[torch.Tensor], torch.Tensor],
    shape: Sequence[int],
    rng: SeededRng,
    samples: int = 20,
    low: float = 0.0,
    high: float = 1.0,
) -> float:
    """Эмпирическая оценка max ||grad(a) - grad(b)|| / ||a - b|| по случайным парам"""
    best = 0.0
    for _ in range(samples):
        a = rng.uniform(shape, low, high)
        b = rng.uniform(shape, low, high)
        dist = float(torch.linalg.vector_norm(a - b))
        if dist == 0.0:
            continue
        ratio = float(torch.linalg.vector_norm(grad_fn(a) - grad_fn(b))) / dist
        best = max(best, ratio)
    return best
