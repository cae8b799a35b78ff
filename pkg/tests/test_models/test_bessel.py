import math

import numpy as np
import pytest
import torch

from core.errors import DomainError
from core.models.bessel import bessel_ratio, log_i0


def series_ratio(t: float) -> float:
    """I1/I0 по степенным рядам"""
    i0 = i1 = 0.0
    term0, term1 = 1.0, t / 2
    for k in range(200):
        i0 += term0
        i1 += term1
        term0 *= (t / 2) ** 2 / ((k + 1) ** 2)
        term1 *= (t / 2) ** 2 / ((k + 1) * (k + 2))
    return i1 / i0


def asymptotic_scaled(nu: int, t: float) -> float:
    """sqrt(2 pi t) e^{-t} I_nu(t) по асимптотическому ряду, до наименьшего члена"""
    mu = 4 * nu**2
    total, term = 1.0, 1.0
    for k in range(1, 60):
        nxt = -term * (mu - (2 * k - 1) ** 2) / (k * 8 * t)
        if abs(nxt) >= abs(term):
            break
        total += nxt
        term = nxt
    return total


class TestBesselRatio:
    def test_zero(self):
        assert bessel_ratio(0.0) == 0.0

    def test_at_one(self):
        assert bessel_ratio(1.0) == pytest.approx(series_ratio(1.0), rel=1e-10)
        # I1(1)/I0(1) = 0.4463899659
        assert bessel_ratio(1.0) == pytest.approx(0.446390, abs=1e-6)

    def test_series_oracle_small_t(self):
        for t in np.linspace(0.0, 15.0, 61):
            expected = series_ratio(float(t))
            assert bessel_ratio(float(t)) == pytest.approx(expected, rel=1e-10, abs=1e-300)

    def test_asymptotic_oracle_large_t(self):
        for t in np.linspace(15.0, 700.0, 60):
            t = float(t)
            expected = asymptotic_scaled(1, t) / asymptotic_scaled(0, t)
            assert bessel_ratio(t) == pytest.approx(expected, rel=1e-8)

    def test_short_expansion_at_500(self):
        t = 500.0
        assert abs(bessel_ratio(t) - (1 - 1 / (2 * t) - 1 / (8 * t**2))) < 1e-8

    def test_monotone_dense_grid(self):
        values = bessel_ratio(torch.linspace(0.0, 700.0, 10_000))
        assert bool(torch.isfinite(values).all())
        assert float(torch.diff(values).min()) >= -1e-15
        assert float(values.max()) < 1.0

    def test_no_overflow_far_out(self):
        assert math.isfinite(bessel_ratio(700.0))
        assert math.isfinite(bessel_ratio(1e5))

    def test_negative_rejected(self):
        with pytest.raises(DomainError, match='t >= 0'):
            bessel_ratio(-0.1)


class TestLogI0:
    def test_zero(self):
        assert float(log_i0(torch.tensor(0.0))) == 0.0

    def test_large_argument_finite(self):
        t = torch.tensor(800.0)
        expected = t - 0.5 * math.log(2 * math.pi * 800.0) + math.log(asymptotic_scaled(0, 800.0))
        assert float(log_i0(t)) == pytest.approx(float(expected), rel=1e-12)
