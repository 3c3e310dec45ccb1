"""Checkpoint binary layout and the checkpoint service"""
import struct

import numpy as np
import pytest

from src.core.checkpoint import FORMAT_VERSION, MAGIC, Checkpoint
from src.core.priors import Rng
from src.core.trainer import train
from src.models.base import DatasetKind
from src.models.config import TrainConfig
from src.models.specs import DatasetSpec
from src.services.checkpoint_service import FileCheckpointService
from src.utils.errors import CheckpointError, DataError


@pytest.fixture(scope="module")
def trained():
    """One short f-AAE run on gauss8"""
    cfg = TrainConfig(
        batch_size=16,
        epochs=1,
        seed=5,
        dataset=DatasetSpec(kind=DatasetKind.GAUSS8, count=64),
        model={"hidden_units": [8]},
    )
    checkpoint, _ = train(cfg)
    return checkpoint


class TestLayout:
    def test_header(self, trained):
        data = trained.to_bytes()
        assert data[:4] == MAGIC
        assert struct.unpack("<H", data[4:6])[0] == FORMAT_VERSION

    def test_round_trip_is_byte_stable(self, trained):
        data = trained.to_bytes()
        assert Checkpoint.from_bytes(data).to_bytes() == data

    def test_loaded_networks_compute_the_same(self, trained):
        loaded = Checkpoint.from_bytes(trained.to_bytes())
        x = Rng(3).normal_array((10, 2))
        for name, net in trained.networks.items():
            other = loaded.network(name)
            with net.evaluation(), other.evaluation():
                np.testing.assert_array_equal(net(x).data, other(x).data)

    def test_state_is_restored(self, trained):
        loaded = Checkpoint.from_bytes(trained.to_bytes())
        assert loaded.config_text == trained.config_text
        assert (loaded.rng.seed, loaded.rng.state) == (trained.rng.seed, trained.rng.state)
        assert list(loaded.optimizer_states) == ["reencode", "disc", "gen"]
        for phase, state in trained.optimizer_states.items():
            assert loaded.optimizer_states[phase].t == state.t
            for key in state.m:
                np.testing.assert_array_equal(loaded.optimizer_states[phase].v[key], state.v[key])

    def test_roles(self, trained):
        assert trained.generator.name == "generator"
        assert trained.encoder.name == "encoder"
        assert trained.discriminator.name == "discriminator"
        with pytest.raises(CheckpointError):
            trained.network("critic")


class TestValidation:
    def test_bad_magic(self, trained):
        data = b"GAAE" + trained.to_bytes()[4:]
        with pytest.raises(CheckpointError) as info:
            Checkpoint.from_bytes(data)
        assert info.value.field == "magic"

    def test_newer_version(self, trained):
        data = trained.to_bytes()
        data = data[:4] + struct.pack("<H", FORMAT_VERSION + 1) + data[6:]
        with pytest.raises(CheckpointError) as info:
            Checkpoint.from_bytes(data)
        assert info.value.field == "version"

    def test_truncated_file(self, trained):
        with pytest.raises(CheckpointError) as info:
            Checkpoint.from_bytes(trained.to_bytes()[:-7])
        assert info.value.field == "checksum"

    def test_flipped_byte(self, trained):
        data = bytearray(trained.to_bytes())
        data[len(data) // 2] ^= 0xFF
        with pytest.raises(CheckpointError) as info:
            Checkpoint.from_bytes(bytes(data))
        assert info.value.field == "checksum"

    def test_tiny_file(self):
        with pytest.raises(CheckpointError):
            Checkpoint.from_bytes(b"FA")


class TestCheckpointService:
    def test_save_and_load(self, trained, tmp_path):
        service = FileCheckpointService()
        path = service.save(tmp_path / "nested" / "run.faae", trained)
        assert path.read_bytes() == trained.to_bytes()
        assert service.load(path).to_bytes() == trained.to_bytes()

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            FileCheckpointService().load(tmp_path / "absent.faae")

    def test_corrupt_file(self, tmp_path):
        path = tmp_path / "bad.faae"
        path.write_bytes(b"FAAE\x00\x00garbage")
        with pytest.raises(CheckpointError):
            FileCheckpointService().load(path)
