import pytest
import torch

from core.errors import DomainError
from core.models.masks import (
    cartesian_line_columns,
    cartesian_mask,
    center_band_width,
    generate_mask,
    random_pixel_mask,
)
from core.numerics.grid import SeededRng


class TestRandomPixelMask:
    def test_full_probability(self, rng):
        assert torch.equal(random_pixel_mask((1, 8, 8), 1.0, rng), torch.ones(1, 8, 8))

    def test_half_probability_fraction(self):
        mask = random_pixel_mask((1, 64, 64), 0.5, SeededRng(2024))
        assert 0.44 <= float(mask.mean()) <= 0.56
        assert set(mask.unique().tolist()) <= {0.0, 1.0}

    @pytest.mark.parametrize('p', [0.0, -0.1, 1.5])
    def test_invalid_probability(self, p, rng):
        with pytest.raises(DomainError, match='probability'):
            random_pixel_mask((4, 4), p, rng)


class TestCartesianMask:
    def test_eight_columns_for_r8_on_64(self):
        columns = cartesian_line_columns(64, 8)
        assert len(columns) == 8
        assert center_band_width(64) == 4
        assert set(range(30, 34)) <= set(columns)

    def test_full_sampling(self):
        assert torch.equal(cartesian_mask((8, 8), 1.0), torch.ones(8, 8))

    def test_dc_column_is_sampled(self):
        mask = cartesian_mask((1, 16, 64), 8)
        assert mask.shape == (1, 16, 64)
        assert bool((mask[..., 0] == 1).all())
        assert int(mask[0, 0].sum()) == 8

    def test_invalid_acceleration(self):
        with pytest.raises(DomainError, match='acceleration'):
            cartesian_line_columns(64, 0.5)


class TestGenerateMask:
    def test_dispatch(self, rng):
        assert generate_mask('cartesian-lines', (1, 8, 8), rng, acceleration=1).sum() == 64
        assert generate_mask('random-pixel', (1, 8, 8), rng, keep_prob=1.0).sum() == 64

    def test_unknown_kind(self, rng):
        with pytest.raises(DomainError, match='Unknown mask kind'):
            generate_mask('radial', (8, 8), rng)
