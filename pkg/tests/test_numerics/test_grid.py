import math

import numpy as np
import pytest
import torch

from core.errors import DivergenceError, DomainError, ShapeMismatchError
from core.numerics.grid import (
    SeededRng,
    as_grid_image,
    check_same_shape,
    dft2,
    ensure_finite,
    idft2,
)
from tests.conftest import naive_dft2, naive_idft2


class TestGridImage:
    """Приведение и проверки GridImage"""

    def test_promotes_2d_to_single_channel(self):
        img = as_grid_image(np.zeros((4, 5)))
        assert img.shape == (1, 4, 5)
        assert img.dtype == torch.float64

    def test_rejects_complex(self):
        with pytest.raises(ShapeMismatchError, match='real-valued'):
            as_grid_image(torch.zeros(2, 2, dtype=torch.complex128))

    def test_rejects_bad_rank(self):
        with pytest.raises(ShapeMismatchError, match='shape'):
            as_grid_image(torch.zeros(3))

    def test_rejects_nan(self):
        with pytest.raises(DomainError, match='finite'):
            as_grid_image([[0.0, math.nan]])

    def test_check_same_shape(self):
        with pytest.raises(ShapeMismatchError, match='a and b'):
            check_same_shape(torch.zeros(1, 2, 2), torch.zeros(1, 2, 3), 'a and b')

    def test_ensure_finite(self):
        ensure_finite(torch.zeros(2))
        with pytest.raises(DivergenceError):
            ensure_finite(torch.tensor([1.0, math.inf]))


class TestDft:
    """Унитарное ДПФ"""

    def test_constant_image_has_single_dc_coefficient(self):
        freq = dft2(torch.full((1, 4, 4), 0.25))
        assert freq[0, 0, 0].real.item() == pytest.approx(4 * 0.25, abs=1e-12)
        freq[0, 0, 0] = 0
        assert torch.abs(freq).max().item() < 1e-12

    def test_round_trip(self, rng):
        x = rng.normal((1, 8, 8))
        back = idft2(dft2(x))
        assert torch.linalg.vector_norm(back.real - x) <= 1e-10 * torch.linalg.vector_norm(x)
        assert torch.abs(back.imag).max().item() < 1e-12

    def test_parseval_against_naive_oracle(self, rng):
        x = rng.normal((1, 16, 16))
        freq = dft2(x)
        assert torch.allclose(freq, naive_dft2(x), atol=1e-10)
        assert abs(torch.linalg.vector_norm(freq) - torch.linalg.vector_norm(x)) <= 1e-10 * torch.linalg.vector_norm(x)

    def test_idft_of_zero(self):
        assert torch.count_nonzero(idft2(torch.zeros(1, 4, 4, dtype=torch.complex128))) == 0

    def test_idft_of_unit_dc(self):
        freq = torch.zeros(1, 2, 2, dtype=torch.complex128)
        freq[0, 0, 0] = 1.0
        assert torch.allclose(idft2(freq).real, torch.full((1, 2, 2), 0.5), atol=1e-15)

    def test_idft_against_naive_oracle(self, rng):
        freq = torch.complex(rng.normal((1, 8, 8)), rng.normal((1, 8, 8)))
        assert torch.allclose(idft2(freq), naive_idft2(freq), atol=1e-10)


class TestSeededRng:
    """Детерминизм PCG64"""

    def test_same_seed_same_stream(self):
        a, b = SeededRng(42), SeededRng(42)
        assert torch.equal(a.normal((100,)), b.normal((100,)))
        assert torch.equal(a.uniform((10,)), b.uniform((10,)))

    def test_spawn_is_deterministic_and_distinct(self):
        base = SeededRng(3)
        assert torch.equal(base.spawn(1).normal((5,)), SeededRng(3).spawn(1).normal((5,)))
        assert not torch.equal(base.spawn(1).normal((5,)), base.spawn(2).normal((5,)))

    def test_state_round_trip(self):
        rng = SeededRng(9)
        rng.normal((7,))
        state = rng.get_state()
        first = rng.normal((7,))
        restored = SeededRng(0)
        restored.set_state(state)
        assert torch.equal(restored.normal((7,)), first)
