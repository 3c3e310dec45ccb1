"""Layer factory: maps layer kinds to implementations"""
from typing import Dict, Optional, Type

from src.core.layers import (
    BatchNorm,
    Conv2D,
    Dense,
    Flatten,
    Layer,
    LeakyReLU,
    MaxPool2D,
    Reshape,
    Sigmoid,
    UnitNorm,
    Upsample2D,
)
from src.models.base import LayerKind
from src.models.specs import LayerSpec
from src.utils.errors import SpecError
from src.utils.logger import get_logger


class LayerFactory:
    """Registry of layer classes, one per `LayerKind`"""

    def __init__(self) -> None:
        self.logger = get_logger("layer_factory")
        self._layer_registry: Dict[LayerKind, Type[Layer]] = {}
        self._register_default_layers()

    def _register_default_layers(self) -> None:
        for layer_class in (
            Dense,
            Conv2D,
            Upsample2D,
            MaxPool2D,
            BatchNorm,
            LeakyReLU,
            Sigmoid,
            Flatten,
            Reshape,
            UnitNorm,
        ):
            self.register_layer(layer_class.kind, layer_class)
        self.logger.debug(f"Registered {len(self._layer_registry)} layer kinds")

    def register_layer(self, kind: LayerKind, layer_class: Type[Layer]) -> None:
        self._layer_registry[kind] = layer_class
        self.logger.debug(f"Registered layer: {kind.value} -> {layer_class.__name__}")

    def create_layer(self, spec: LayerSpec) -> Layer:
        """Instantiate an unbuilt layer for `spec`"""
        if spec.kind not in self._layer_registry:
            raise SpecError(f"Layer kind not registered: {spec.kind.value}")
        return self._layer_registry[spec.kind](spec)


_factory: Optional[LayerFactory] = None


def get_layer_factory() -> LayerFactory:
    """Process-wide default factory"""
    global _factory
    if _factory is None:
        _factory = LayerFactory()
    return _factory
