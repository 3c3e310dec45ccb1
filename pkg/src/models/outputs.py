"""Reports produced by objectives, training, evaluation and verification"""
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator


class LossReport(BaseModel):
    """Losses observed for one step or one objective evaluation.

    `terms` keeps the graph-connected tensors behind the floats so a caller
    can backpropagate; it is excluded from serialization.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    adv_d: float = Field(..., description="Discriminator objective value (maximized by D)")
    adv_g: float = Field(..., description="Generator-side adversarial loss")
    recon_or_reenc: float = Field(..., description="Distance term")
    total_weighted: float = Field(..., description="weight_adv * adv_g + alpha * distance")
    alpha: float = Field(..., description="Weight on the distance term")
    terms: dict[str, Any] = Field(default_factory=dict, exclude=True, repr=False)

    def is_finite(self) -> bool:
        values = (self.adv_d, self.adv_g, self.recon_or_reenc, self.total_weighted)
        return all(v == v and abs(v) != float("inf") for v in values)


class StepRecord(BaseModel):
    """One row of the per-step metrics trace"""
    step: int
    epoch: int
    adv_d: float
    adv_g: float
    recon_or_reenc: float
    alpha: float
    lr_g_t: float
    lr_d_t: float


class EpochRecord(BaseModel):
    """Mean losses over one epoch"""
    epoch: int
    steps: int
    adv_d: float
    adv_g: float
    recon_or_reenc: float
    alpha: float


class MorphWeights(BaseModel):
    """Four anchor weights of a latent combination"""

    alphas: tuple[float, float, float, float] = Field(..., description="Weights for z1..z4")

    @field_validator("alphas")
    @classmethod
    def validate_finite(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        if any(a != a or abs(a) == float("inf") for a in v):
            raise ValueError("morph weights must be finite")
        return v

    @classmethod
    def bilinear(cls, u: float, v: float) -> "MorphWeights":
        return cls(alphas=((1 - u) * (1 - v), u * (1 - v), (1 - u) * v, u * v))


class MetricReport(BaseModel):
    """Read-only evaluation of a trained or fresh model"""
    recon_mse: float
    reenc_mse: float
    disc_accuracy: float = Field(..., ge=0.0, le=1.0)
    mode_coverage: Optional[int] = Field(None, description="Modes hit, 2D datasets only")
    modes: Optional[int] = Field(None, description="Modes in the dataset, 2D datasets only")
    samples_evaluated: int


class GradCheckResult(BaseModel):
    """Worst relative error of one op kind over randomized instances"""
    op: str
    instances: int
    max_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_error < self.tolerance


class RunSummary(BaseModel):
    """What a `train` invocation produced"""
    output_directory: str
    checkpoint_path: str
    steps: int
    epochs: int
    final_epoch: Optional[EpochRecord] = None
    artifacts: list[str] = Field(default_factory=list)
