"""Random streams, the unit-sphere prior, datasets and the PPM codec"""
import numpy as np
import pytest

from src.core.datasets import (
    Dataset,
    image_files,
    load_image_dir,
    make_dataset,
    make_gauss8,
    make_rings2d,
    make_sprites,
)
from src.core.priors import Rng, sample_unit_sphere, sample_unit_sphere_batch
from src.models.base import DatasetKind
from src.models.specs import DatasetSpec
from src.utils.errors import ConfigError, ContractError, DataError
from src.utils.ppm import compose_panel, decode_ppm, encode_ppm


class TestRng:
    def test_same_seed_same_stream(self):
        a, b = Rng(42), Rng(42)
        assert [a.next_u64() for _ in range(5)] == [b.next_u64() for _ in range(5)]

    def test_seed_zero_is_valid(self):
        rng = Rng(0)
        assert rng.state != 0
        assert len({rng.next_u64() for _ in range(100)}) == 100

    def test_derive_is_keyed_and_does_not_advance(self):
        root = Rng(9)
        state = root.state
        data, init = root.derive("data"), root.derive("init")
        assert root.state == state
        assert data.next_u64() != init.next_u64()
        assert Rng(9).derive("data").next_u64() == Rng(9).derive("data").next_u64()

    def test_uniform_range(self):
        values = Rng(1).uniform_array(2000)
        assert values.min() >= 0.0 and values.max() < 1.0
        assert abs(values.mean() - 0.5) < 0.05

    def test_integer_bounds(self):
        rng = Rng(2)
        assert {rng.integer(3) for _ in range(300)} == {0, 1, 2}
        with pytest.raises(ContractError):
            rng.integer(0)

    def test_normal_moments(self):
        values = Rng(3).normal_array(5001)
        assert abs(values.mean()) < 0.06
        assert abs(values.std() - 1.0) < 0.06

    def test_permutation(self):
        order = Rng(4).permutation(50)
        assert sorted(order.tolist()) == list(range(50))

    def test_zero_state_rejected(self):
        with pytest.raises(ContractError):
            Rng.from_state(1, 0)


class TestUnitSphere:
    @pytest.mark.parametrize("n", [1, 2, 8, 100])
    def test_draws_have_unit_norm(self, n):
        z = sample_unit_sphere_batch(50, n, Rng(n))
        assert z.shape == (50, n)
        np.testing.assert_allclose(np.linalg.norm(z, axis=1), 1.0, atol=1e-12)

    def test_one_dimensional_prior_is_a_sign(self):
        values = sample_unit_sphere_batch(200, 1, Rng(5))[:, 0]
        assert set(np.unique(values)) == {-1.0, 1.0}

    def test_directions_are_spread(self):
        z = sample_unit_sphere_batch(4000, 2, Rng(6))
        np.testing.assert_allclose(z.mean(axis=0), 0.0, atol=0.05)

    def test_invalid_dimension(self):
        with pytest.raises(ContractError):
            sample_unit_sphere(0, Rng(0))


class TestSyntheticData:
    def test_gauss8_points_near_centers(self):
        data = make_gauss8(400, 2.0, 0.02, Rng(1))
        assert data.sample_shape == (2,)
        assert data.mode_count == 8
        dist = np.linalg.norm(data.samples[:, None, :] - data.modes[None], axis=2).min(axis=1)
        assert dist.max() < 0.2
        np.testing.assert_allclose(np.linalg.norm(data.modes, axis=1), 2.0)

    def test_rings2d_radii(self):
        data = make_rings2d(300, [1.0, 2.0, 3.0], 0.01, Rng(2))
        radius = np.linalg.norm(data.samples, axis=1)
        nearest = np.abs(radius[:, None] - np.array([1.0, 2.0, 3.0])[None]).min(axis=1)
        assert nearest.max() < 0.1
        assert data.mode_count == 3

    def test_sprites(self):
        data = make_sprites(6, 8, Rng(3))
        assert data.samples.shape == (6, 3, 8, 8)
        assert data.samples.min() >= 0.0 and data.samples.max() <= 1.0

    def test_sprite_size_checked(self):
        with pytest.raises(ContractError):
            make_sprites(2, 12, Rng(0))

    def test_make_dataset_is_deterministic(self):
        spec = DatasetSpec(kind=DatasetKind.RINGS2D, count=64)
        np.testing.assert_array_equal(make_dataset(spec, Rng(7)).samples, make_dataset(spec, Rng(7)).samples)

    def test_samples_are_read_only(self):
        data = make_gauss8(16, 1.0, 0.1, Rng(0))
        with pytest.raises(ValueError):
            data.samples[0, 0] = 5.0


class TestBatches:
    def _data(self, count):
        return Dataset(DatasetKind.GAUSS8, np.arange(count * 2, dtype=np.float64).reshape(count, 2))

    def test_epoch_covers_every_sample_once(self):
        data = self._data(100)
        seen = np.concatenate(list(data.batches(32, Rng(1))))
        assert sorted(seen[:, 0].tolist()) == sorted(data.samples[:, 0].tolist())

    def test_trailing_single_sample_is_merged(self):
        data = self._data(65)
        sizes = [len(b) for b in data.batches(32, Rng(1))]
        assert sizes == [32, 33]
        assert data.num_batches(32) == 2

    def test_short_dataset_is_one_batch(self):
        data = self._data(5)
        assert [len(b) for b in data.batches(32, Rng(1))] == [5]
        assert data.num_batches(32) == 1

    def test_shuffle_depends_on_stream(self):
        data = self._data(40)
        first = next(data.batches(40, Rng(1)))
        second = next(data.batches(40, Rng(2)))
        assert not np.array_equal(first, second)

    def test_empty_dataset_rejected(self):
        with pytest.raises(DataError):
            Dataset(DatasetKind.GAUSS8, np.zeros((0, 2)))


class TestPpm:
    def test_black_pixel_bytes(self):
        data = encode_ppm(np.zeros((1, 1, 3)))
        assert data == b"P6\n1 1\n255\n\x00\x00\x00"

    def test_round_trip_within_one_level(self):
        image = Rng(4).uniform_array((5, 7, 3))
        decoded = decode_ppm(encode_ppm(image))
        assert decoded.shape == (5, 7, 3)
        assert np.abs(decoded - image).max() <= 0.5 / 255 + 1e-12

    def test_header_comments_are_skipped(self):
        decoded = decode_ppm(b"P6 # comment\n2 1\n# another\n255\n\xff\x00\x00\x00\xff\x00")
        np.testing.assert_array_equal(decoded[0], [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])

    def test_out_of_range_refused(self):
        with pytest.raises(ContractError):
            encode_ppm(np.full((1, 1, 3), 1.5))

    @pytest.mark.parametrize(
        "payload",
        [b"P3\n1 1\n255\n000", b"P6\n1 1\n65535\n\x00\x00\x00", b"P6\n2 2\n255\n\x00\x00\x00"],
    )
    def test_malformed_files(self, payload):
        with pytest.raises(DataError):
            decode_ppm(payload)

    def test_panel_geometry(self):
        tiles = [np.zeros((4, 3, 3)) for _ in range(5)]
        panel = compose_panel(tiles, 2, 3, 2)
        assert panel.shape == (2 * 4 + 3 * 2, 3 * 3 + 4 * 2, 3)
        assert panel[0, 0, 0] == 1.0
        assert panel[2, 2, 0] == 0.0

    def test_panel_too_small(self):
        with pytest.raises(ContractError):
            compose_panel([np.zeros((2, 2, 3))] * 3, 1, 2, 0)


class TestImageDirectory:
    def _write(self, directory, name, image):
        (directory / name).write_bytes(encode_ppm(image))

    def test_loads_in_filename_order(self, tmp_path):
        self._write(tmp_path, "b.ppm", np.ones((4, 4, 3)))
        self._write(tmp_path, "a.ppm", np.zeros((4, 4, 3)))
        (tmp_path / "notes.txt").write_text("ignored")
        assert [p.name for p in image_files(tmp_path)] == ["a.ppm", "b.ppm"]
        data = load_image_dir(tmp_path)
        assert data.samples.shape == (2, 3, 4, 4)
        assert data.samples[0].max() == 0.0 and data.samples[1].min() == 1.0

    def test_mixed_shapes(self, tmp_path):
        self._write(tmp_path, "a.ppm", np.zeros((4, 4, 3)))
        self._write(tmp_path, "b.ppm", np.zeros((5, 4, 3)))
        with pytest.raises(DataError):
            load_image_dir(tmp_path)

    def test_expected_shape(self, tmp_path):
        self._write(tmp_path, "a.ppm", np.zeros((4, 4, 3)))
        with pytest.raises(DataError):
            load_image_dir(tmp_path, (3, 8, 8))

    def test_empty_directory(self, tmp_path):
        with pytest.raises(DataError, match="no samples"):
            load_image_dir(tmp_path)

    def test_missing_directory(self, tmp_path):
        with pytest.raises(DataError, match="not a directory"):
            load_image_dir(tmp_path / "missing")

    def test_image_dir_spec_without_path(self):
        spec = DatasetSpec.model_construct(kind=DatasetKind.IMAGE_DIR, path=None, size=8)
        with pytest.raises(ConfigError) as info:
            make_dataset(spec, Rng(0))
        assert info.value.key == "dataset.path"
