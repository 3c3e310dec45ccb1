"""Networks: ordered layer compositions with named parameters"""
from __future__ import annotations

import json
from collections import OrderedDict
from contextlib import contextmanager
from typing import Any, Iterable, Iterator, Optional, Sequence

import numpy as np

from src.core.layer_factory import LayerFactory, get_layer_factory
from src.core.layers import Layer
from src.core.priors import Rng
from src.core.tensor import Tensor, as_tensor
from src.models.specs import LayerSpec
from src.utils.errors import CheckpointError, DimensionError

Shape = tuple[int, ...]


class Network:
    """A built stack of layers.

    Parameter names are `<index>.<kind>.<param>`, unique by construction.
    `training` selects batchnorm behavior; `frozen()` temporarily stops
    gradients reaching this network's parameters while still letting them
    flow through it.
    """

    def __init__(self, name: str, input_shape: Sequence[int], layers: list[Layer]):
        self.name = name
        self.input_shape: Shape = tuple(int(d) for d in input_shape)
        self.layers = layers
        self.training = True
        shape = self.input_shape
        for layer in layers:
            if layer.input_shape != shape or layer.output_shape is None:
                raise DimensionError(f"{name}: layer {layer.kind.value} was built for another shape", layer.input_shape or (), shape)
            shape = layer.output_shape
        self.output_shape: Shape = shape

        self.params: OrderedDict[str, Tensor] = OrderedDict()
        self.buffers: OrderedDict[str, np.ndarray] = OrderedDict()
        for i, layer in enumerate(layers):
            for pname, tensor in layer.params.items():
                full = f"{i}.{layer.kind.value}.{pname}"
                tensor.name = f"{name}/{full}"
                self.params[full] = tensor
            for bname, buf in layer.buffers.items():
                self.buffers[f"{i}.{layer.kind.value}.{bname}"] = buf

    @classmethod
    def from_specs(
        cls,
        name: str,
        input_shape: Sequence[int],
        specs: Iterable[LayerSpec],
        rng: Optional[Rng] = None,
        factory: Optional[LayerFactory] = None,
    ) -> "Network":
        """Build every layer in order; parameters are zero when `rng` is None"""
        factory = factory or get_layer_factory()
        layers = []
        shape: Shape = tuple(input_shape)
        for spec in specs:
            layer = factory.create_layer(spec)
            shape = layer.build(shape, rng)
            layers.append(layer)
        return cls(name, input_shape, layers)

    # -- structure -------------------------------------------------------
    @property
    def layer_specs(self) -> list[LayerSpec]:
        return [layer.spec for layer in self.layers]

    @property
    def parameter_count(self) -> int:
        return sum(t.size for t in self.params.values())

    def describe(self) -> dict[str, Any]:
        return {
            "input_shape": list(self.input_shape),
            "layers": [spec.model_dump(mode="json") for spec in self.layer_specs],
        }

    def spec_json(self) -> str:
        """Canonical JSON of the architecture, stored in checkpoints"""
        return json.dumps(self.describe(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_spec_json(cls, name: str, text: str) -> "Network":
        try:
            description = json.loads(text)
            specs = [LayerSpec.model_validate(item) for item in description["layers"]]
            return cls.from_specs(name, description["input_shape"], specs)
        except (ValueError, KeyError, TypeError) as e:
            raise CheckpointError("spec", f"network '{name}' cannot be rebuilt: {e}") from e

    # -- modes -----------------------------------------------------------
    def train(self) -> "Network":
        self.training = True
        return self

    def eval(self) -> "Network":
        self.training = False
        return self

    @contextmanager
    def evaluation(self) -> Iterator["Network"]:
        previous = self.training
        self.training = False
        try:
            yield self
        finally:
            self.training = previous

    @contextmanager
    def frozen(self) -> Iterator["Network"]:
        previous = {name: t.requires_grad for name, t in self.params.items()}
        for t in self.params.values():
            t.requires_grad = False
        try:
            yield self
        finally:
            for name, t in self.params.items():
                t.requires_grad = previous[name]

    def zero_grad(self) -> None:
        for t in self.params.values():
            t.zero_grad()

    # -- computation -----------------------------------------------------
    def forward(self, x: Tensor | np.ndarray) -> Tensor:
        x = as_tensor(x)
        if x.shape[1:] != self.input_shape:
            raise DimensionError(f"{self.name}: input does not match network input", x.shape[1:], self.input_shape)
        for layer in self.layers:
            x = layer.forward(x, self.training)
        return x

    __call__ = forward

    # -- state -----------------------------------------------------------
    def state_arrays(self) -> dict[str, np.ndarray]:
        """Parameters followed by buffers, by name"""
        state = {name: t.data for name, t in self.params.items()}
        state.update(self.buffers)
        return state

    def load_arrays(self, params: dict[str, np.ndarray], buffers: dict[str, np.ndarray]) -> None:
        for group, target in (("parameter", {k: t.data for k, t in self.params.items()}), ("buffer", self.buffers)):
            source = params if group == "parameter" else buffers
            if set(source) != set(target):
                raise CheckpointError(group, f"names for network '{self.name}' do not match its spec")
            for key, array in source.items():
                if array.shape != target[key].shape:
                    raise CheckpointError(group, f"'{key}' has shape {array.shape}, expected {target[key].shape}")
                target[key][...] = array

    def __repr__(self) -> str:
        return f"Network(name={self.name!r}, {self.input_shape} -> {self.output_shape}, params={self.parameter_count})"
