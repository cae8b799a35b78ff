"""
Modified Bessel helpers for the Rician likelihood.

B(t) = I1(t) / I0(t) is computed from the exponentially scaled functions
i1e / i0e, whose common factor exp(-|t|) cancels in the ratio, so nothing
overflows even far beyond t = 700.
"""

from typing import Union

import torch

from ..errors import DomainError

Number = Union[float, torch.Tensor]


def _ratio(t: torch.Tensor) -> torch.Tensor:
    # i1e нечётна, i0e чётна: отношение корректно и при t < 0
    return torch.special.i1e(t) / torch.special.i0e(t)


def bessel_ratio(t: Number) -> Number:
    """B(t) = I1(t)/I0(t) for t >= 0; accepts floats or tensors."""
    as_float = not isinstance(t, torch.Tensor)
    tt = torch.as_tensor(t, dtype=torch.float64)
    if bool((tt < 0).any()) or bool(torch.isnan(tt).any()):
        raise DomainError('bessel_ratio is defined for t >= 0')
    out = _ratio(tt)
    return float(out) if as_float else out


def signed_bessel_ratio(t: torch.Tensor) -> torch.Tensor:
    """B on the whole real line (odd extension), used inside gradients."""
    return _ratio(t)


def log_i0(t: torch.Tensor) -> torch.Tensor:
    """log I0(t) = log(i0e(t)) + |t|; exactly 0 at t = 0."""
    return torch.log(torch.special.i0e(t)) + t.abs()

