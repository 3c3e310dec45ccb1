"""Base enumerations shared by specs, configs and reports"""
from enum import Enum


class Objective(str, Enum):
    """Training objectives"""
    FAAE = "faae"
    AAE = "aae"
    GAN = "gan"
    BIGAN = "bigan"


class ArchKind(str, Enum):
    """Network families produced by the builders"""
    CONV = "conv"
    MLP = "mlp"


class LayerKind(str, Enum):
    """Layer kinds understood by the layer factory"""
    DENSE = "dense"
    CONV2D = "conv2d"
    UPSAMPLE2D = "upsample2d"
    MAXPOOL2D = "maxpool2d"
    BATCHNORM = "batchnorm"
    LEAKY_RELU = "leaky_relu"
    SIGMOID = "sigmoid"
    FLATTEN = "flatten"
    RESHAPE = "reshape"
    UNIT_NORM = "unit_norm"


class DatasetKind(str, Enum):
    """Desk-scale data sources"""
    GAUSS8 = "gauss8"
    RINGS2D = "rings2d"
    SPRITES = "sprites"
    IMAGE_DIR = "image_dir"

    @property
    def is_image(self) -> bool:
        return self in (DatasetKind.SPRITES, DatasetKind.IMAGE_DIR)


class LossNorm(str, Enum):
    """Distance used by the re-encoding and reconstruction terms"""
    L2SQ = "l2sq"
    L2 = "l2"
    L1 = "l1"


class DecayMode(str, Enum):
    """What the inverse-time decay counts"""
    STEP = "step"
    EPOCH = "epoch"


class NetworkRole(str, Enum):
    """Names under which networks are stored in a checkpoint"""
    GENERATOR = "generator"
    ENCODER = "encoder"
    DISCRIMINATOR = "discriminator"
    LATENT_DISCRIMINATOR = "latent_discriminator"
    JOINT_DISCRIMINATOR = "joint_discriminator"
