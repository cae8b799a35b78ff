# core/models/base.py
from abc import ABC, abstractmethod
from typing import Optional, Tuple

import torch

from ..errors import UnsupportedProxError
from ..numerics.grid import SeededRng


class DataFidelity(ABC):
    """
    Базовый класс для всех моделей данных f(x, y).

    Сертификаты гладкости: lipschitz_grad (L_f), lipschitz_hessian (rho_f);
    None означает «неизвестно».
    """

    name: str = 'fidelity'
    convex: bool = True
    has_closed_prox: bool = False
    lipschitz_grad: Optional[float] = None
    lipschitz_hessian: Optional[float] = None

    def __init__(self, noise_level: float):
        self.noise_level = float(noise_level)

    @abstractmethod
    def simulate(self, x_true: torch.Tensor, rng: SeededRng) -> torch.Tensor:
        """Измерение y = A(x) + n"""

    @abstractmethod
    def value(self, x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
        """f(x, y) как 0-мерный тензор (дифференцируем по x)"""

    @abstractmethod
    def grad(self, x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
        """grad_x f(x, y)"""

    def prox(self, x: torch.Tensor, y: torch.Tensor, tau) -> torch.Tensor:
        raise UnsupportedProxError(
            f'{type(self).__name__} has no closed-form proximal operator'
        )

    def adjoint_init(self, y: torch.Tensor) -> torch.Tensor:
        """Стартовая точка x0 по измерению (A^T y или y)"""
        return y.real.clone() if y.is_complex() else y.clone()

    def describe(self) -> dict:
        return {
            'model': self.name,
            'noise_level': self.noise_level,
            'lipschitz_grad': self.lipschitz_grad,
            'lipschitz_hessian': self.lipschitz_hessian,
            'convex': self.convex,
            'has_closed_prox': self.has_closed_prox,
        }


class Regularizer(ABC):
    """Явный регуляризатор g: значение и градиент по входу"""

    @abstractmethod
    def g_value_and_grad(
        self, x: torch.Tensor, create_graph: bool = False
    ) -> Tuple[torch.Tensor, torch.Tensor]:
        """(g(x), grad g(x))"""

    def g_value(self, x: torch.Tensor) -> torch.Tensor:
        value, _ = self.g_value_and_grad(x)
        return value

    def g_grad(self, x: torch.Tensor, create_graph: bool = False) -> torch.Tensor:
        _, grad = self.g_value_and_grad(x, create_graph=create_graph)
        return grad
