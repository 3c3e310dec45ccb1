"""Run configuration: every hyperparameter of one training run"""
from typing import Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from .base import ArchKind, DecayMode, LossNorm, Objective
from .specs import DatasetSpec, ModelSpec


class ModelOptions(BaseModel):
    """Model keys of a run config; latent and data shapes are resolved later"""

    arch: Optional[ArchKind] = Field(None, description="Network family, defaults by dataset kind")
    channels: list[int] = Field(default_factory=lambda: [32, 64])
    hidden_units: list[int] = Field(default_factory=lambda: [128, 128])
    seed_size: int = Field(4, ge=1)
    kernel_size: int = Field(3, ge=1)


class TrainConfig(BaseModel):
    """Hyperparameters of a training run; every field has a default"""

    objective: Objective = Field(Objective.FAAE, description="Training objective")
    latent_dim: Optional[int] = Field(None, ge=1, description="Latent dimension, defaults by dataset kind")
    batch_size: int = Field(64, ge=2, description="Samples per step")
    epochs: int = Field(50, ge=0, description="Passes over the dataset")
    seed: int = Field(0, ge=0, description="Seed of every random stream in the run")
    alpha_schedule: list[tuple[int, float]] = Field(
        default_factory=lambda: [(0, 30.0), (200, 100.0)],
        description="(start_epoch, alpha) pairs for the distance term",
    )
    weight_adv: float = Field(0.1, ge=0.0, description="Weight on the generator adversarial loss")
    lr_g: float = Field(3e-4, gt=0.0, description="Generator learning rate")
    lr_d: float = Field(1e-3, gt=0.0, description="Discriminator learning rate")
    lr_e: Optional[float] = Field(None, gt=0.0, description="Encoder learning rate, defaults to lr_g")
    decay: float = Field(1e-4, ge=0.0, description="Inverse-time learning-rate decay")
    decay_mode: DecayMode = Field(DecayMode.STEP, description="Whether decay counts steps or epochs")
    encoder_normalize: bool = Field(True, description="Project encoder output onto the unit sphere")
    loss_norm: LossNorm = Field(LossNorm.L2SQ, description="Distance for re-encoding/reconstruction")
    dataset: DatasetSpec = Field(default_factory=DatasetSpec)
    model: ModelOptions = Field(default_factory=ModelOptions)

    @field_validator("alpha_schedule")
    @classmethod
    def validate_schedule(cls, v: list[tuple[int, float]]) -> list[tuple[int, float]]:
        if not v or v[0][0] != 0:
            raise ValueError("alpha_schedule must start at epoch 0")
        starts = [start for start, _ in v]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError("alpha_schedule epochs must be strictly increasing")
        if any(alpha < 0 for _, alpha in v):
            raise ValueError("alpha values must be non-negative")
        return v

    @model_validator(mode="after")
    def check_arch(self) -> "TrainConfig":
        if self.model.arch == ArchKind.CONV and not self.dataset.kind.is_image:
            raise ValueError("conv networks need an image dataset")
        return self

    @property
    def effective_lr_e(self) -> float:
        return self.lr_e if self.lr_e is not None else self.lr_g

    @property
    def effective_latent_dim(self) -> int:
        if self.latent_dim is not None:
            return self.latent_dim
        return 32 if self.dataset.kind.is_image else 2

    @property
    def effective_arch(self) -> ArchKind:
        if self.model.arch is not None:
            return self.model.arch
        return ArchKind.CONV if self.dataset.kind.is_image else ArchKind.MLP

    def alpha_at(self, epoch: int) -> float:
        """Alpha in force at `epoch` under the schedule"""
        alpha = self.alpha_schedule[0][1]
        for start, value in self.alpha_schedule:
            if start <= epoch:
                alpha = value
        return alpha

    def model_spec(self, data_shape: tuple[int, ...]) -> ModelSpec:
        return ModelSpec(
            arch=self.effective_arch,
            latent_dim=self.effective_latent_dim,
            data_shape=tuple(data_shape),
            channels=self.model.channels,
            hidden_units=self.model.hidden_units,
            seed_size=self.model.seed_size,
            kernel_size=self.model.kernel_size,
            encoder_normalize=self.encoder_normalize,
        )
