import pytest
import torch

from core.errors import ShapeMismatchError, UnsupportedProxError
from core.models.fidelity import InpaintingModel, MaskedFourierModel, RicianModel
from core.models.regularizer import estimate_lipschitz
from core.numerics.grid import SeededRng, idft2
from tests.conftest import central_difference, naive_dft2, unit_direction


def measured(model, rng, shape=(1, 8, 8)):
    x_true = rng.uniform(shape)
    return x_true, model.simulate(x_true, rng)


class TestSimulate:
    def test_inpainting_full_mask_noiseless(self, rng):
        model = InpaintingModel(torch.ones(1, 8, 8), noise_level=0.0)
        x = rng.uniform((1, 8, 8))
        assert torch.equal(model.simulate(x, rng), x)

    def test_rician_noiseless(self, rng):
        model = RicianModel(noise_level=1e-12)
        x = rng.uniform((1, 8, 8))
        assert torch.allclose(model.simulate(x, rng), x, atol=1e-12)

    def test_mri_full_mask_noiseless(self, rng):
        model = MaskedFourierModel(torch.ones(1, 8, 8), noise_level=0.0)
        x = rng.uniform((1, 8, 8))
        assert torch.allclose(idft2(model.simulate(x, rng)).real, x, atol=1e-10)

    def test_deterministic_given_seed(self, mri_model):
        x = SeededRng(0).uniform((1, 8, 8))
        assert torch.equal(mri_model.simulate(x, SeededRng(1)), mri_model.simulate(x, SeededRng(1)))

    def test_mri_measurement_is_zero_off_mask(self, mri_model, rng):
        _, y = measured(mri_model, rng)
        assert torch.count_nonzero(y[mri_model.mask == 0]) == 0


class TestValue:
    def test_inpainting_consistent_point(self, inpainting_model, rng):
        x = rng.uniform((1, 8, 8))
        y = inpainting_model.mask * x
        assert float(inpainting_model.value(x, y)) == 0.0

    def test_rician_at_zero(self, rician_model, rng):
        _, y = measured(rician_model, rng)
        assert float(rician_model.value(torch.zeros(1, 8, 8), y)) == 0.0

    def test_rician_zero_measurement(self, rician_model, rng):
        x = rng.uniform((1, 8, 8))
        value = rician_model.value(x, torch.zeros_like(x))
        assert float(value) == pytest.approx(float((x**2).sum()) / (2 * 0.01), rel=1e-12)

    def test_mri_against_naive_dft(self, mri_model, rng):
        x_true, y = measured(mri_model, rng)
        x = rng.uniform((1, 8, 8))
        residual = mri_model.mask * naive_dft2(x) - y
        expected = 0.5 * float((residual.abs() ** 2).sum())
        assert float(mri_model.value(x, y)) == pytest.approx(expected, rel=1e-10)

    def test_shape_mismatch(self, inpainting_model):
        with pytest.raises(ShapeMismatchError):
            inpainting_model.value(torch.zeros(1, 8, 8), torch.zeros(1, 8, 7))


class TestGradient:
    def test_rician_zero_at_origin(self, rician_model, rng):
        _, y = measured(rician_model, rng)
        assert torch.count_nonzero(rician_model.grad(torch.zeros(1, 8, 8), y)) == 0

    def test_inpainting_zero_at_consistency(self, inpainting_model, rng):
        x = rng.uniform((1, 8, 8))
        assert torch.count_nonzero(inpainting_model.grad(x, inpainting_model.mask * x)) == 0

    @pytest.mark.parametrize('name', ['mri', 'inpainting', 'rician'])
    def test_finite_differences(self, name, mri_model, inpainting_model, rician_model):
        model = {'mri': mri_model, 'inpainting': inpainting_model, 'rician': rician_model}[name]
        rng = SeededRng(77)
        for _ in range(20):
            _, y = measured(model, rng)
            x = rng.uniform((1, 8, 8))
            eps = unit_direction(rng, x.shape)
            analytic = float((model.grad(x, y) * eps).sum())
            numeric = central_difference(lambda v: model.value(v, y), x, eps)
            assert abs(numeric - analytic) <= 1e-6 * (1 + abs(analytic))

    def test_mri_lipschitz_certificate(self, mri_model, rng):
        _, y = measured(mri_model, rng)
        for _ in range(20):
            a, b = rng.normal((1, 8, 8)), rng.normal((1, 8, 8))
            lhs = torch.linalg.vector_norm(mri_model.grad(a, y) - mri_model.grad(b, y))
            assert float(lhs) <= float(torch.linalg.vector_norm(a - b)) * (1 + 1e-12)

    def test_rician_lipschitz_envelope(self, rician_model, rng):
        _, y = measured(rician_model, rng)
        estimate = estimate_lipschitz(lambda v: rician_model.grad(v, y), (1, 8, 8), rng)
        assert 0 < estimate < 2 / rician_model.noise_level**2
        assert rician_model.lipschitz_grad == pytest.approx(100.0)


class TestProx:
    def test_inpainting_full_mask_closed_form(self, full_inpainting, rng):
        x, y = rng.uniform((1, 8, 8)), rng.uniform((1, 8, 8))
        assert torch.allclose(full_inpainting.prox(x, y, 1.0), (x + y) / 2, atol=1e-15)

    @pytest.mark.parametrize('name', ['mri', 'inpainting'])
    def test_small_tau_limit(self, name, mri_model, inpainting_model, rng):
        model = mri_model if name == 'mri' else inpainting_model
        _, y = measured(model, rng)
        x = rng.uniform((1, 8, 8))
        assert torch.linalg.vector_norm(model.prox(x, y, 1e-8) - x) <= 1e-6

    @pytest.mark.parametrize('name', ['mri', 'inpainting'])
    @pytest.mark.parametrize('tau', [0.1, 1.0, 7.5])
    def test_optimality_condition(self, name, tau, mri_model, inpainting_model, rng):
        model = mri_model if name == 'mri' else inpainting_model
        _, y = measured(model, rng)
        x = rng.normal((1, 8, 8))
        p = model.prox(x, y, tau)
        residual = p + tau * model.grad(p, y) - x
        assert torch.linalg.vector_norm(residual) <= 1e-9 * torch.linalg.vector_norm(x)

    def test_mri_against_gradient_descent(self, mri_model, rng):
        _, y = measured(mri_model, rng)
        x = rng.uniform((1, 8, 8))
        tau = 1.0
        u = x.clone()
        step = 1.0 / (1.0 + 1.0 / tau)
        for _ in range(10_000):
            u = u - step * (mri_model.grad(u, y) + (u - x) / tau)
        assert torch.allclose(mri_model.prox(x, y, tau), u, atol=1e-6)

    def test_rician_unsupported(self, rician_model):
        with pytest.raises(UnsupportedProxError, match='closed-form'):
            rician_model.prox(torch.zeros(1, 8, 8), torch.zeros(1, 8, 8), 1.0)


class TestCertificates:
    def test_describe(self, mri_model, rician_model):
        assert mri_model.describe()['lipschitz_grad'] == 1.0
        assert mri_model.convex and not rician_model.convex
        assert rician_model.describe()['has_closed_prox'] is False

    def test_rician_needs_positive_noise(self):
        with pytest.raises(ValueError, match='positive'):
            RicianModel(0.0)
