from .base import DataFidelity, Regularizer
from .bessel import bessel_ratio, log_i0, signed_bessel_ratio
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .fidelity import FIDELITY_MODELS, InpaintingModel, MaskedFourierModel, RicianModel
from .masks import cartesian_mask, generate_mask, random_pixel_mask
from .regularizer import (
    AnalyticRegularizer,
    GradStepRegularizer,
    SmoothPotentialNet,
    estimate_lipschitz,
)

__all__ = [
    'AnalyticRegularizer',
    'Checkpoint',
    'DataFidelity',
    'FIDELITY_MODELS',
    'GradStepRegularizer',
    'InpaintingModel',
    'MaskedFourierModel',
    'Regularizer',
    'RicianModel',
    'SmoothPotentialNet',
    'bessel_ratio',
    'cartesian_mask',
    'estimate_lipschitz',
    'generate_mask',
    'load_checkpoint',
    'log_i0',
    'random_pixel_mask',
    'save_checkpoint',
    'signed_bessel_ratio',
]
