"""Layer, model and dataset specifications"""
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .base import ArchKind, DatasetKind, LayerKind


class LayerSpec(BaseModel):
    """One layer of a network; only the fields relevant to `kind` are used"""

    model_config = ConfigDict(frozen=True)

    kind: LayerKind = Field(..., description="Layer kind")
    units: Optional[int] = Field(None, ge=1, description="Dense output units")
    channels: Optional[int] = Field(None, ge=1, description="Conv output channels")
    kernel_size: int = Field(3, ge=1, description="Square conv kernel size")
    stride: int = Field(1, ge=1, description="Conv or pool stride")
    padding: int = Field(0, ge=0, description="Zero padding on each side")
    factor: int = Field(2, ge=1, description="Upsampling scale factor")
    window: int = Field(2, ge=1, description="Pooling window")
    slope: float = Field(0.2, ge=0.0, lt=1.0, description="Leaky ReLU negative slope")
    momentum: float = Field(0.99, ge=0.0, le=1.0, description="Batchnorm running-stat momentum")
    eps: float = Field(1e-5, gt=0.0, description="Batchnorm epsilon")
    target_shape: Optional[tuple[int, ...]] = Field(None, description="Per-sample reshape target")

    @model_validator(mode="after")
    def check_kind_fields(self) -> "LayerSpec":
        if self.kind == LayerKind.DENSE and self.units is None:
            raise ValueError("dense layer needs 'units'")
        if self.kind == LayerKind.CONV2D and self.channels is None:
            raise ValueError("conv2d layer needs 'channels'")
        if self.kind == LayerKind.RESHAPE:
            if not self.target_shape or any(d < 1 for d in self.target_shape):
                raise ValueError("reshape layer needs a positive 'target_shape'")
        return self


class ModelSpec(BaseModel):
    """Shared description from which G, E and the discriminators are built"""

    arch: ArchKind = Field(ArchKind.CONV, description="Network family")
    latent_dim: int = Field(..., ge=1, description="Latent dimension n")
    data_shape: tuple[int, ...] = Field(..., description="Per-sample data shape, (c,h,w) for images")
    channels: list[int] = Field(default_factory=lambda: [32, 64], description="Conv widths per stage")
    hidden_units: list[int] = Field(default_factory=lambda: [128, 128], description="MLP hidden widths")
    seed_size: int = Field(4, ge=1, description="Spatial size of the generator's projected seed")
    kernel_size: int = Field(3, ge=1, description="Conv kernel size")
    encoder_normalize: bool = Field(True, description="Project encoder output onto the unit sphere")

    @model_validator(mode="after")
    def check_widths(self) -> "ModelSpec":
        if any(c < 1 for c in self.channels) or any(h < 1 for h in self.hidden_units):
            raise ValueError("layer widths must be positive")
        if not self.data_shape or any(d < 1 for d in self.data_shape):
            raise ValueError("data_shape must be non-empty and positive")
        return self

    @property
    def is_image(self) -> bool:
        return len(self.data_shape) == 3

    @property
    def data_size(self) -> int:
        size = 1
        for d in self.data_shape:
            size *= d
        return size


class DatasetSpec(BaseModel):
    """Where training data comes from"""

    kind: DatasetKind = Field(DatasetKind.GAUSS8, description="Dataset kind")
    count: int = Field(4096, ge=1, description="Samples to draw for synthetic kinds")
    radius: float = Field(2.0, gt=0.0, description="gauss8 mode circle radius")
    sigma: float = Field(0.02, gt=0.0, description="Isotropic noise for 2D kinds")
    ring_radii: list[float] = Field(default_factory=lambda: [1.0, 2.0, 3.0], description="rings2d radii")
    size: int = Field(16, description="Sprite or expected image side length")
    path: Optional[Path] = Field(None, description="Directory of P6 PPM files for image_dir")

    @model_validator(mode="after")
    def check_kind_fields(self) -> "DatasetSpec":
        if self.kind == DatasetKind.IMAGE_DIR and self.path is None:
            raise ValueError("image_dir dataset needs 'path'")
        if self.kind == DatasetKind.RINGS2D and (not self.ring_radii or min(self.ring_radii) <= 0):
            raise ValueError("rings2d needs positive ring radii")
        return self
