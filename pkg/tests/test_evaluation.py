"""Reconstruction, generation, latent morphing and metrics"""
import math

import numpy as np
import pytest

from src.core.builders import build_discriminator, build_encoder, build_generator, build_latent_discriminator
from src.core.datasets import make_gauss8, make_sprites
from src.core.evaluation import decode, encode, evaluate, generate, latent_path, morph, morph_grid, reconstruct
from src.core.priors import Rng, sample_unit_sphere_batch
from src.models.outputs import MorphWeights
from src.utils.errors import ContractError, DegeneracyError


def _state(*nets):
    return [{k: v.copy() for k, v in net.state_arrays().items()} for net in nets]


class TestMorph:
    def test_single_anchor_is_returned_exactly(self):
        anchors = sample_unit_sphere_batch(4, 5, Rng(0))
        for k in range(4):
            weights = [0.0] * 4
            weights[k] = 3.0
            np.testing.assert_array_equal(morph(anchors, weights), anchors[k])

    def test_negative_single_weight_flips(self):
        anchors = sample_unit_sphere_batch(4, 3, Rng(1))
        np.testing.assert_array_equal(morph(anchors, (0.0, -2.0, 0.0, 0.0)), -anchors[1])

    def test_orthonormal_pair(self):
        anchors = np.eye(4)
        np.testing.assert_allclose(morph(anchors, (1.0, 1.0, 0.0, 0.0)), [1 / math.sqrt(2), 1 / math.sqrt(2), 0.0, 0.0])

    def test_opposite_anchors_cancel(self):
        z1 = sample_unit_sphere_batch(1, 3, Rng(2))[0]
        anchors = np.stack([z1, -z1, z1, z1])
        with pytest.raises(DegeneracyError):
            morph(anchors, (1.0, 1.0, 0.0, 0.0))

    def test_all_zero_weights(self):
        with pytest.raises(DegeneracyError):
            morph(np.eye(4), (0.0, 0.0, 0.0, 0.0))

    def test_non_finite_weights_rejected(self):
        with pytest.raises(ValueError):
            MorphWeights(alphas=(1.0, float("nan"), 0.0, 0.0))

    def test_power_of_two_scale_invariance(self):
        anchors = sample_unit_sphere_batch(4, 6, Rng(3))
        weights = np.array([0.3, -0.7, 0.2, 0.5])
        np.testing.assert_array_equal(morph(anchors, weights), morph(anchors, 8.0 * weights))

    def test_scale_invariance(self):
        anchors = sample_unit_sphere_batch(4, 6, Rng(4))
        weights = np.array([0.3, -0.7, 0.2, 0.5])
        np.testing.assert_array_equal(morph(anchors, weights), morph(anchors, 2.7 * weights))

    def test_randomized_scale_invariance(self):
        rng = Rng(6)
        for _ in range(500):
            anchors = sample_unit_sphere_batch(4, 8, rng)
            weights = rng.uniform_array(4, -1.0, 1.0)
            c = float(rng.uniform_array(1, 0.01, 100.0)[0])
            np.testing.assert_array_equal(morph(anchors, c * weights), morph(anchors, weights))

    def test_randomized_results_are_unit(self):
        rng = Rng(5)
        for _ in range(10_000):
            anchors = sample_unit_sphere_batch(4, 8, rng)
            weights = rng.uniform_array(4, -1.0, 1.0)
            np.testing.assert_allclose(np.linalg.norm(morph(anchors, weights)), 1.0, atol=1e-12)

    def test_anchor_count_must_match(self):
        with pytest.raises(ContractError):
            morph(np.eye(3), (1.0, 0.0, 0.0, 0.0))

    def test_bilinear_weights(self):
        assert MorphWeights.bilinear(0.0, 0.0).alphas == (1.0, 0.0, 0.0, 0.0)
        assert MorphWeights.bilinear(1.0, 1.0).alphas == (0.0, 0.0, 0.0, 1.0)
        assert sum(MorphWeights.bilinear(0.3, 0.6).alphas) == pytest.approx(1.0)


class TestMorphGrid:
    def _images(self):
        return Rng(8).normal_array((4, 2))

    def test_corners_match_reconstructions_bit_for_bit(self, toy_nets):
        G, E, _ = toy_nets
        images = self._images()
        grid = morph_grid(E, G, images, 4)
        corners = reconstruct(E, G, images)
        assert grid.shape == (16, 2)
        np.testing.assert_array_equal(grid[0], corners[0])
        np.testing.assert_array_equal(grid[3], corners[1])
        np.testing.assert_array_equal(grid[12], corners[2])
        np.testing.assert_array_equal(grid[15], corners[3])

    def test_center_cell_is_equal_mix(self, toy_nets):
        G, E, _ = toy_nets
        images = self._images()
        grid = morph_grid(E, G, images, 3)
        center = decode(G, morph(encode(E, images), (0.25, 0.25, 0.25, 0.25))[None])
        np.testing.assert_allclose(grid[4], center[0], atol=1e-6)

    def test_edge_cell_mixes_two_corners(self, toy_nets):
        G, E, _ = toy_nets
        images = self._images()
        grid = morph_grid(E, G, images, 3)
        expected = decode(G, morph(encode(E, images), (0.5, 0.5, 0.0, 0.0))[None])
        np.testing.assert_allclose(grid[1], expected[0], atol=1e-6)

    def test_grid_too_small(self, toy_nets):
        G, E, _ = toy_nets
        with pytest.raises(ContractError):
            morph_grid(E, G, self._images(), 1)

    def test_needs_four_images(self, toy_nets):
        G, E, _ = toy_nets
        with pytest.raises(ContractError):
            morph_grid(E, G, self._images()[:3], 3)

    def test_degenerate_cell_is_located(self, toy_spec):
        spec = toy_spec.model_copy(update={"encoder_normalize": False})
        G, E = build_generator(spec, Rng(0)), build_encoder(spec, None)
        with pytest.raises(DegeneracyError) as info:
            morph_grid(E, G, self._images(), 3)
        assert info.value.cell == (0, 1)


class TestPipelines:
    def test_reconstruct_shape_check(self, toy_nets):
        G, E, _ = toy_nets
        with pytest.raises(ContractError):
            reconstruct(E, G, np.zeros((3, 5)))

    def test_reconstruct_rejects_non_mirrors(self, toy_spec):
        other = toy_spec.model_copy(update={"latent_dim": 3})
        with pytest.raises(ContractError):
            reconstruct(build_encoder(other, Rng(0)), build_generator(toy_spec, Rng(0)), np.zeros((2, 2)))

    def test_generate_is_deterministic(self, toy_nets):
        G, _, _ = toy_nets
        np.testing.assert_array_equal(generate(G, 7, Rng(3)), generate(G, 7, Rng(3)))
        assert generate(G, 0, Rng(3)).shape == (0, 2)

    def test_latent_path_endpoints(self, toy_nets):
        G, E, _ = toy_nets
        x = Rng(1).normal_array((2, 2))
        path = latent_path(E, G, x[0], x[1], 5)
        assert path.shape == (5, 2)
        ends = reconstruct(E, G, x)
        np.testing.assert_array_equal(path[0], ends[0])
        np.testing.assert_array_equal(path[-1], ends[1])
        np.testing.assert_array_equal(latent_path(E, G, x[0], x[1], 2), ends)

    def test_latent_path_needs_two_steps(self, toy_nets):
        G, E, _ = toy_nets
        with pytest.raises(ContractError):
            latent_path(E, G, np.zeros(2), np.ones(2), 1)


class TestEvaluate:
    def test_gauss8_report(self, toy_nets):
        G, E, D = toy_nets
        data = make_gauss8(200, 2.0, 0.02, Rng(0))
        report = evaluate(E, G, D, data, 100, Rng(1))
        assert report.modes == 8
        assert 0 <= report.mode_coverage <= 8
        assert 0.0 <= report.disc_accuracy <= 1.0
        assert report.recon_mse >= 0.0 and report.reenc_mse >= 0.0
        assert report.samples_evaluated == 100

    def test_is_read_only(self, sprite_spec):
        rng = Rng(2)
        G, E, D = (build(sprite_spec, rng) for build in (build_generator, build_encoder, build_discriminator))
        data = make_sprites(6, 8, Rng(3))
        before = _state(G, E, D)
        report = evaluate(E, G, D, data, 6, Rng(4))
        for saved, net in zip(before, (G, E, D)):
            for key, value in net.state_arrays().items():
                np.testing.assert_array_equal(value, saved[key])
        assert report.mode_coverage is None and report.modes is None
        assert all(net.training for net in (G, E, D))

    def test_latent_discriminator_is_scored_on_codes(self, toy_spec):
        rng = Rng(5)
        G, E = build_generator(toy_spec, rng), build_encoder(toy_spec, rng)
        D = build_latent_discriminator(toy_spec, None)
        report = evaluate(E, G, D, make_gauss8(64, 2.0, 0.02, Rng(6)), 32, Rng(7))
        # a constant 0.5 scorer is never right
        assert report.disc_accuracy == 0.0

    def test_count_must_be_positive(self, toy_nets):
        G, E, D = toy_nets
        with pytest.raises(ContractError):
            evaluate(E, G, D, make_gauss8(16, 2.0, 0.02, Rng(0)), 0, Rng(1))

    def test_count_beyond_dataset_reports_samples_used(self, toy_nets):
        G, E, D = toy_nets
        report = evaluate(E, G, D, make_gauss8(40, 2.0, 0.02, Rng(0)), 100, Rng(1))
        assert report.samples_evaluated == 40
