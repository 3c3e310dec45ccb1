"""Desk-scale datasets: 2D mixtures, procedural sprites and PPM directories"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from src.core.priors import Rng
from src.models.base import DatasetKind
from src.models.specs import DatasetSpec
from src.utils.errors import ConfigError, ContractError, DataError
from src.utils.logger import get_logger
from src.utils.ppm import hwc_to_chw, read_ppm

SPRITE_SIZES = (8, 16, 32)


class Dataset:
    """Immutable collection of samples of one shape.

    Images are stored channel-first, (3, h, w), with values in [0, 1].
    `modes` holds mixture centers (gauss8) and `ring_radii` the circle radii
    (rings2d); both feed mode-coverage evaluation.
    """

    def __init__(
        self,
        kind: DatasetKind,
        samples: np.ndarray,
        modes: Optional[np.ndarray] = None,
        ring_radii: Optional[list[float]] = None,
    ):
        samples = np.array(samples, dtype=np.float64, copy=True)
        if samples.ndim < 2:
            raise ContractError(f"samples need a leading sample axis, got shape {samples.shape}")
        if len(samples) == 0:
            raise DataError("no samples")
        samples.flags.writeable = False
        self.kind = kind
        self.samples = samples
        self.modes = None if modes is None else np.array(modes, dtype=np.float64)
        self.ring_radii = list(ring_radii) if ring_radii is not None else None

    @property
    def sample_shape(self) -> tuple[int, ...]:
        return tuple(self.samples.shape[1:])

    @property
    def mode_count(self) -> Optional[int]:
        if self.modes is not None:
            return len(self.modes)
        if self.ring_radii is not None:
            return len(self.ring_radii)
        return None

    def __len__(self) -> int:
        return len(self.samples)

    def num_batches(self, batch_size: int) -> int:
        if batch_size < 1:
            raise ContractError(f"batch_size must be >= 1, got {batch_size}")
        full, rest = divmod(len(self), batch_size)
        if full == 0:
            return 1
        return full + (1 if rest > 1 else 0)

    def batches(self, batch_size: int, rng: Rng) -> Iterator[np.ndarray]:
        """One epoch of shuffled batches covering every sample exactly once.

        A trailing batch of a single sample is merged into the previous batch
        so batchnorm never sees a batch of one.
        """
        order = rng.permutation(len(self))
        bounds = list(range(0, len(self), batch_size)) + [len(self)]
        if len(bounds) > 2 and bounds[-1] - bounds[-2] == 1:
            del bounds[-2]
        for start, stop in zip(bounds, bounds[1:]):
            yield self.samples[order[start:stop]]


def make_gauss8(count: int, radius: float, sigma: float, rng: Rng) -> Dataset:
    """Equal-weight mixture of 8 isotropic Gaussians on a circle"""
    if count < 8:
        raise ContractError(f"gauss8 needs count >= 8, got {count}")
    if sigma <= 0:
        raise ContractError(f"sigma must be positive, got {sigma}")
    angles = 2.0 * math.pi * np.arange(8) / 8.0
    centers = radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)

    components = np.array([rng.integer(8) for _ in range(count)])
    noise = rng.normal_array((count, 2))
    return Dataset(DatasetKind.GAUSS8, centers[components] + sigma * noise, modes=centers)


def make_rings2d(count: int, radii: list[float], sigma: float, rng: Rng) -> Dataset:
    """Points on concentric circles with isotropic Gaussian jitter"""
    if count < len(radii):
        raise ContractError(f"rings2d needs count >= {len(radii)}, got {count}")
    if sigma <= 0:
        raise ContractError(f"sigma must be positive, got {sigma}")
    if not radii or min(radii) <= 0:
        raise ContractError("ring radii must be positive")
    ring = np.array([rng.integer(len(radii)) for _ in range(count)])
    theta = 2.0 * math.pi * rng.uniform_array(count)
    r = np.asarray(radii, dtype=np.float64)[ring]
    points = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)
    return Dataset(DatasetKind.RINGS2D, points + sigma * rng.normal_array((count, 2)), ring_radii=radii)


def _draw_sprite(size: int, rng: Rng) -> np.ndarray:
    image = np.empty((3, size, size), dtype=np.float64)
    image[:] = (0.3 * rng.uniform_array(3))[:, None, None]
    yy, xx = np.mgrid[0:size, 0:size] + 0.5

    for _ in range(1 + rng.integer(3)):
        color = (0.2 + 0.8 * rng.uniform_array(3))[:, None]
        cx, cy = size * rng.uniform_array(2, 0.2, 0.8)
        extent = size * (0.12 + 0.2 * rng.uniform())
        shape = rng.integer(3)
        if shape == 0:
            mask = (xx - cx) ** 2 + (yy - cy) ** 2 <= extent**2
        elif shape == 1:
            mask = (np.abs(xx - cx) <= extent) & (np.abs(yy - cy) <= extent)
        else:
            thickness = max(0.75, extent / 3.0)
            if rng.integer(2) == 0:
                mask = (np.abs(xx - cx) <= extent * 1.5) & (np.abs(yy - cy) <= thickness)
            else:
                mask = (np.abs(xx - cx) <= thickness) & (np.abs(yy - cy) <= extent * 1.5)
        image[:, mask] = color
    return image


def make_sprites(count: int, size: int, rng: Rng) -> Dataset:
    """size x size RGB images of colored disks, squares and bars"""
    if size not in SPRITE_SIZES:
        raise ContractError(f"sprite size must be one of {SPRITE_SIZES}, got {size}")
    if count < 1:
        raise ContractError(f"count must be >= 1, got {count}")
    return Dataset(DatasetKind.SPRITES, np.stack([_draw_sprite(size, rng) for _ in range(count)]))


def image_files(path: Path) -> list[Path]:
    """*.ppm files directly inside `path`, ordered by filename bytes"""
    directory = Path(path)
    if not directory.is_dir():
        raise DataError("not a directory", directory)
    files = sorted(
        (p for p in directory.iterdir() if p.is_file() and p.suffix.lower() == ".ppm"),
        key=lambda p: p.name.encode("utf-8"),
    )
    if not files:
        raise DataError("no samples", directory)
    return files


def load_image_dir(path: Path, expected_shape: Optional[tuple[int, ...]] = None) -> Dataset:
    """Every *.ppm file in `path`, in `image_files` order, as (3, h, w) samples"""
    logger = get_logger("datasets")
    directory = Path(path)
    files = image_files(directory)

    samples = []
    for file in files:
        image = hwc_to_chw(read_ppm(file))
        shape = expected_shape or (samples[0].shape if samples else image.shape)
        if image.shape != tuple(shape):
            raise DataError(f"image shape {image.shape} does not match {tuple(shape)}", file)
        samples.append(image)

    logger.info(f"Loaded {len(samples)} images of shape {samples[0].shape} from {directory}")
    return Dataset(DatasetKind.IMAGE_DIR, np.stack(samples))


def make_dataset(spec: DatasetSpec, rng: Rng) -> Dataset:
    """Build the dataset a run config describes"""
    if spec.kind == DatasetKind.GAUSS8:
        return make_gauss8(spec.count, spec.radius, spec.sigma, rng)
    if spec.kind == DatasetKind.RINGS2D:
        return make_rings2d(spec.count, spec.ring_radii, spec.sigma, rng)
    if spec.kind == DatasetKind.SPRITES:
        return make_sprites(spec.count, spec.size, rng)
    if spec.path is None:
        raise ConfigError("image_dir dataset needs a directory", key="dataset.path")
    return load_image_dir(spec.path, (3, spec.size, spec.size))
