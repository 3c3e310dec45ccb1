"""Value functions and distance terms"""
import math

import numpy as np
import pytest

from src.core.builders import build_discriminator, build_encoder, build_generator, build_joint_discriminator, build_latent_discriminator
from src.core.objectives import (
    aae_value,
    bigan_value,
    distance,
    faae_value,
    gan_value,
    reconstruction_loss,
    reencoding_loss,
)
from src.core.priors import Rng, sample_unit_sphere_batch
from src.core.tensor import Tensor, verification_mode
from src.models.base import LossNorm
from src.utils.errors import ContractError


class TestDistances:
    @pytest.mark.parametrize(
        "norm, expected",
        [(LossNorm.L2SQ, 12.5), (LossNorm.L2, 5.0), (LossNorm.L1, 3.5)],
    )
    def test_norms(self, norm, expected):
        with verification_mode():
            value = distance(Tensor([[3.0, 4.0]]), Tensor([[0.0, 0.0]]), norm)
        assert value.item() == pytest.approx(expected)

    def test_reencoding_of_identical_codes_is_zero(self):
        z = Tensor(sample_unit_sphere_batch(5, 3, Rng(0)))
        assert reencoding_loss(z, z).item() == 0.0

    def test_reencoding_needs_matching_latents(self):
        with pytest.raises(ContractError):
            reencoding_loss(Tensor(np.zeros((4, 2))), Tensor(np.zeros((4, 3))))

    def test_reconstruction_is_per_pixel_mse(self):
        with verification_mode():
            x = Tensor(np.zeros((2, 3, 2, 2)))
            x_hat = Tensor(np.full((2, 3, 2, 2), 0.5))
            assert reconstruction_loss(x, x_hat).item() == pytest.approx(0.25)

    def test_reconstruction_shape_mismatch(self):
        with pytest.raises(ContractError):
            reconstruction_loss(Tensor(np.zeros((2, 4))), Tensor(np.zeros((2, 3))))


class TestGanValue:
    def test_indifferent_discriminator(self):
        with verification_mode():
            half = Tensor(np.full((8, 1), 0.5))
            adv_d, adv_g = gan_value(half, half)
        assert adv_d.item() == pytest.approx(-2.0 * math.log(2.0), abs=1e-9)
        assert adv_g.item() == pytest.approx(math.log(2.0), abs=1e-9)

    def test_saturated_scores_stay_finite(self):
        adv_d, adv_g = gan_value(Tensor(np.zeros((4, 1))), Tensor(np.ones((4, 1))))
        assert np.isfinite(adv_d.item()) and np.isfinite(adv_g.item())

    def test_empty_scores(self):
        with pytest.raises(ContractError):
            gan_value(Tensor(np.zeros((0, 1))), Tensor(np.zeros((2, 1))))


class TestFaaeValue:
    def _batch(self, toy_spec, count=16):
        x = Tensor(Rng(1).normal_array((count, *toy_spec.data_shape)))
        z = Tensor(sample_unit_sphere_batch(count, toy_spec.latent_dim, Rng(2)))
        return x, z

    def test_constant_half_discriminator(self, toy_spec):
        with verification_mode():
            G, E = build_generator(toy_spec, Rng(0)), build_encoder(toy_spec, Rng(0))
            D = build_discriminator(toy_spec, None)
            x, z = self._batch(toy_spec)
            report = faae_value(G, E, D, x, z, alpha=10.0)
        assert report.adv_d == pytest.approx(-2.0 * math.log(2.0), abs=1e-9)
        assert report.adv_g == pytest.approx(math.log(2.0), abs=1e-9)
        assert report.total_weighted == pytest.approx(0.1 * report.adv_g + 10.0 * report.recon_or_reenc)

    def test_alpha_zero_matches_plain_gan(self, toy_spec):
        with verification_mode():
            G, E, D = (build(toy_spec, Rng(3)) for build in (build_generator, build_encoder, build_discriminator))
            x, z = self._batch(toy_spec)
            report = faae_value(G, E, D, x, z, alpha=0.0)
            adv_d, adv_g = gan_value(D(x), D(G(z)))
        assert report.adv_d == pytest.approx(adv_d.item(), abs=1e-12)
        assert report.adv_g == pytest.approx(adv_g.item(), abs=1e-12)
        assert report.total_weighted == pytest.approx(0.1 * adv_g.item(), abs=1e-12)

    def test_terms_are_connected(self, toy_nets, toy_spec):
        G, E, D = toy_nets
        x, z = self._batch(toy_spec)
        report = faae_value(G, E, D, x, z, alpha=1.0)
        report.terms["total"].backward()
        assert all(t.grad is not None for t in G.params.values())
        assert all(t.grad is not None for t in E.params.values())

    def test_not_mirrors(self, toy_spec):
        other = toy_spec.model_copy(update={"latent_dim": 3})
        G, E = build_generator(toy_spec, Rng(0)), build_encoder(other, Rng(0))
        x, z = self._batch(toy_spec)
        with pytest.raises(ContractError):
            faae_value(G, E, build_discriminator(toy_spec, Rng(0)), x, z, alpha=1.0)


class TestBaselineValues:
    def test_aae_uses_reconstruction(self, toy_spec):
        with verification_mode():
            G, E = build_generator(toy_spec, Rng(0)), build_encoder(toy_spec, Rng(0))
            D = build_latent_discriminator(toy_spec, Rng(0))
            x = Tensor(Rng(1).normal_array((8, 2)))
            z = Tensor(sample_unit_sphere_batch(8, 2, Rng(2)))
            report = aae_value(G, E, D, x, z, alpha=1.0)
            expected = reconstruction_loss(x, G(E(x))).item()
        assert report.recon_or_reenc == pytest.approx(expected, abs=1e-12)

    def test_aae_latent_width_checked(self, toy_spec):
        other = toy_spec.model_copy(update={"latent_dim": 3})
        G, E = build_generator(toy_spec, Rng(0)), build_encoder(toy_spec, Rng(0))
        x = Tensor(np.zeros((4, 2)))
        z = Tensor(sample_unit_sphere_batch(4, 2, Rng(2)))
        with pytest.raises(ContractError):
            aae_value(G, E, build_latent_discriminator(other, Rng(0)), x, z, alpha=1.0)

    def test_bigan_reports_detached_diagnostic(self, toy_spec):
        G, E = build_generator(toy_spec, Rng(0)), build_encoder(toy_spec, Rng(0))
        D = build_joint_discriminator(toy_spec, Rng(0))
        x = Tensor(Rng(1).normal_array((8, 2)))
        z = Tensor(sample_unit_sphere_batch(8, 2, Rng(2)))
        report = bigan_value(G, E, D, x, z)
        assert report.alpha == 0.0
        assert report.recon_or_reenc >= 0.0
        assert not report.terms["distance"].requires_grad
        assert report.total_weighted == pytest.approx(0.1 * report.adv_g, rel=1e-6)
