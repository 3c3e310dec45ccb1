"""Builders for the generator, encoder and discriminators.

Conv generators project the latent code to a (width, seed, seed) map and
double the spatial size once per stage; the encoder and data-space
discriminator mirror that with max-pooling. Conv layers use "same" zero
padding so only pools and upsamples change spatial size. The mlp family
serves 2D data and quick tests.
"""
from __future__ import annotations

from typing import Optional

from src.core.network import Network
from src.core.priors import Rng
from src.models.base import ArchKind, LayerKind, NetworkRole
from src.models.specs import LayerSpec, ModelSpec
from src.utils.errors import SpecError

L = LayerKind


def _conv(channels: int, spec: ModelSpec) -> LayerSpec:
    if spec.kernel_size % 2 == 0:
        raise SpecError(f"'same' padding needs an odd kernel size, got {spec.kernel_size}")
    return LayerSpec(kind=L.CONV2D, channels=channels, kernel_size=spec.kernel_size, padding=spec.kernel_size // 2)


def _check_conv_spec(spec: ModelSpec) -> None:
    if not spec.is_image:
        raise SpecError(f"conv networks need (c, h, w) data, got {spec.data_shape}")
    _, h, w = spec.data_shape
    reach = spec.seed_size * 2 ** len(spec.channels)
    if h != w or h != reach:
        raise SpecError(
            f"data {h}x{w} is not reachable by doubling a {spec.seed_size}x{spec.seed_size} seed "
            f"over {len(spec.channels)} stages"
        )


def _mlp_hidden(units: list[int]) -> list[LayerSpec]:
    layers: list[LayerSpec] = []
    for width in units:
        layers += [LayerSpec(kind=L.DENSE, units=width), LayerSpec(kind=L.LEAKY_RELU)]
    return layers


def _conv_trunk(spec: ModelSpec) -> list[LayerSpec]:
    """[conv -> batchnorm -> leaky_relu -> maxpool] per stage, then flatten"""
    layers: list[LayerSpec] = []
    for width in spec.channels:
        layers += [
            _conv(width, spec),
            LayerSpec(kind=L.BATCHNORM),
            LayerSpec(kind=L.LEAKY_RELU),
            LayerSpec(kind=L.MAXPOOL2D, window=2, stride=2),
        ]
    return layers + [LayerSpec(kind=L.FLATTEN)]


def generator_specs(spec: ModelSpec) -> list[LayerSpec]:
    if spec.arch == ArchKind.MLP:
        layers = _mlp_hidden(spec.hidden_units) + [LayerSpec(kind=L.DENSE, units=spec.data_size)]
        if spec.is_image:
            layers += [LayerSpec(kind=L.RESHAPE, target_shape=spec.data_shape), LayerSpec(kind=L.SIGMOID)]
        return layers

    _check_conv_spec(spec)
    widths = list(reversed(spec.channels))
    seed = spec.seed_size
    layers = [
        LayerSpec(kind=L.DENSE, units=widths[0] * seed * seed),
        LayerSpec(kind=L.RESHAPE, target_shape=(widths[0], seed, seed)),
        LayerSpec(kind=L.BATCHNORM),
        LayerSpec(kind=L.LEAKY_RELU),
    ]
    for width in widths[1:] + [spec.channels[0]]:
        layers += [
            LayerSpec(kind=L.UPSAMPLE2D, factor=2),
            _conv(width, spec),
            LayerSpec(kind=L.BATCHNORM),
            LayerSpec(kind=L.LEAKY_RELU),
        ]
    return layers + [_conv(spec.data_shape[0], spec), LayerSpec(kind=L.SIGMOID)]


def encoder_specs(spec: ModelSpec) -> list[LayerSpec]:
    if spec.arch == ArchKind.MLP:
        layers = [LayerSpec(kind=L.FLATTEN)] if spec.is_image else []
        layers += _mlp_hidden(list(reversed(spec.hidden_units)))
    else:
        _check_conv_spec(spec)
        layers = _conv_trunk(spec)
    layers.append(LayerSpec(kind=L.DENSE, units=spec.latent_dim))
    if spec.encoder_normalize:
        layers.append(LayerSpec(kind=L.UNIT_NORM))
    return layers


def discriminator_specs(spec: ModelSpec) -> list[LayerSpec]:
    if spec.arch == ArchKind.MLP:
        layers = [LayerSpec(kind=L.FLATTEN)] if spec.is_image else []
        layers += _mlp_hidden(list(reversed(spec.hidden_units)))
    else:
        _check_conv_spec(spec)
        layers = _conv_trunk(spec)
    return layers + [LayerSpec(kind=L.DENSE, units=1), LayerSpec(kind=L.SIGMOID)]


def _score_head(spec: ModelSpec) -> list[LayerSpec]:
    return _mlp_hidden(list(reversed(spec.hidden_units))) + [
        LayerSpec(kind=L.DENSE, units=1),
        LayerSpec(kind=L.SIGMOID),
    ]


def build_generator(spec: ModelSpec, rng: Optional[Rng]) -> Network:
    """G: latent (n,) -> data_shape"""
    return Network.from_specs(NetworkRole.GENERATOR.value, (spec.latent_dim,), generator_specs(spec), rng)


def build_encoder(spec: ModelSpec, rng: Optional[Rng]) -> Network:
    """E: data_shape -> latent (n,), unit norm when `encoder_normalize`"""
    return Network.from_specs(NetworkRole.ENCODER.value, spec.data_shape, encoder_specs(spec), rng)


def build_discriminator(spec: ModelSpec, rng: Optional[Rng]) -> Network:
    """D: data_shape -> (1,) probability"""
    return Network.from_specs(NetworkRole.DISCRIMINATOR.value, spec.data_shape, discriminator_specs(spec), rng)


def build_latent_discriminator(spec: ModelSpec, rng: Optional[Rng]) -> Network:
    """Latent-space D used by the AAE baseline"""
    return Network.from_specs(NetworkRole.LATENT_DISCRIMINATOR.value, (spec.latent_dim,), _score_head(spec), rng)


def build_joint_discriminator(spec: ModelSpec, rng: Optional[Rng]) -> Network:
    """BiGAN D on concat(latent, flattened data)"""
    width = spec.latent_dim + spec.data_size
    return Network.from_specs(NetworkRole.JOINT_DISCRIMINATOR.value, (width,), _score_head(spec), rng)


def mirror_check(g: Network, e: Network) -> bool:
    """E consumes what G produces and returns what G consumes"""
    latent = 1
    for d in g.input_shape:
        latent *= d
    produced = 1
    for d in e.output_shape:
        produced *= d
    return e.input_shape == g.output_shape and produced == latent
