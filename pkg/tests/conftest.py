"""Shared fixtures and the --runslow switch"""
import pytest

from src.config.dependencies import clear_container
from src.core.builders import build_discriminator, build_encoder, build_generator
from src.core.priors import Rng
from src.models.base import ArchKind, DatasetKind
from src.models.config import TrainConfig
from src.models.specs import DatasetSpec, ModelSpec


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run long training tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def fresh_container():
    clear_container()
    yield
    clear_container()


@pytest.fixture
def rng():
    return Rng(1234)


@pytest.fixture
def toy_spec():
    """Tiny mlp model on 2D data"""
    return ModelSpec(arch=ArchKind.MLP, latent_dim=2, data_shape=(2,), hidden_units=[8, 8])


@pytest.fixture
def sprite_spec():
    """Tiny conv model on 8x8 RGB images"""
    return ModelSpec(
        arch=ArchKind.CONV,
        latent_dim=4,
        data_shape=(3, 8, 8),
        channels=[2, 3],
        seed_size=2,
    )


@pytest.fixture
def toy_nets(toy_spec):
    root = Rng(7)
    return build_generator(toy_spec, root), build_encoder(toy_spec, root), build_discriminator(toy_spec, root)


@pytest.fixture
def toy_config():
    """Small gauss8 f-AAE run that finishes in a few seconds"""
    return TrainConfig(
        batch_size=32,
        epochs=2,
        seed=3,
        dataset=DatasetSpec(kind=DatasetKind.GAUSS8, count=128),
        model={"hidden_units": [16, 16]},
    )
