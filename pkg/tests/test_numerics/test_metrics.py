import math

import pytest
import torch

from core.errors import DomainError, ShapeMismatchError
from core.numerics.metrics import PSNR_INF, SSIM_K1, psnr, safe_ssim, ssim


class TestPsnr:
    def test_identical_images_return_sentinel(self, image):
        assert psnr(image, image.clone()) == PSNR_INF

    def test_known_value(self):
        assert psnr(torch.zeros(1, 4, 4), torch.full((1, 4, 4), 0.1)) == pytest.approx(20.0, abs=1e-12)

    def test_against_direct_mse(self, rng):
        x, ref = rng.uniform((1, 8, 8)), rng.uniform((1, 8, 8))
        mse = float(((x - ref) ** 2).mean())
        assert psnr(x, ref) == pytest.approx(10 * math.log10(1.0 / mse), abs=1e-12)

    def test_scale_consistency(self, rng):
        x, ref = rng.uniform((1, 8, 8)), rng.uniform((1, 8, 8))
        assert psnr(3.0 * x, 3.0 * ref, peak=3.0) == pytest.approx(psnr(x, ref), abs=1e-9)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            psnr(torch.zeros(1, 4, 4), torch.zeros(1, 4, 5))

    def test_nonpositive_peak(self, image):
        with pytest.raises(DomainError, match='peak'):
            psnr(image, image, peak=0.0)


class TestSsim:
    def test_identical(self, rng):
        x = rng.uniform((1, 16, 16))
        assert ssim(x, x.clone()) == pytest.approx(1.0, abs=1e-12)

    def test_constant_shift_matches_luminance_oracle(self):
        ref = torch.full((1, 16, 16), 0.2)
        x = torch.full((1, 16, 16), 0.7)
        c1 = SSIM_K1**2
        expected = (2 * 0.2 * 0.7 + c1) / (0.2**2 + 0.7**2 + c1)
        assert ssim(x, ref) == pytest.approx(expected, abs=1e-9)

    def test_symmetric(self, rng):
        x, ref = rng.uniform((1, 32, 32)), rng.uniform((1, 32, 32))
        assert ssim(x, ref) == pytest.approx(ssim(ref, x), abs=1e-12)

    def test_window_too_large(self):
        with pytest.raises(ShapeMismatchError, match='window'):
            ssim(torch.zeros(1, 8, 8), torch.zeros(1, 8, 8))

    def test_multichannel_rejected(self):
        with pytest.raises(ShapeMismatchError, match='single channel'):
            ssim(torch.zeros(2, 16, 16), torch.zeros(2, 16, 16))


class TestSafeSsim:
    def test_small_image_gives_nan(self, image):
        assert math.isnan(safe_ssim(image, image))

    def test_matches_ssim_on_large_image(self, rng):
        x, ref = rng.uniform((1, 16, 16)), rng.uniform((1, 16, 16))
        assert safe_ssim(x, ref) == ssim(x, ref)
