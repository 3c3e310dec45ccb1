"""Post-training pipelines: reconstruction, generation, latent morphing and metrics.

Everything here runs networks in evaluation mode without recording a graph
and never mutates parameters or batchnorm statistics.
"""
from __future__ import annotations

from contextlib import ExitStack, contextmanager
from typing import Iterator, Optional, Sequence

import numpy as np

from src.core.builders import mirror_check
from src.core.datasets import Dataset
from src.core.network import Network
from src.core.objectives import joint_pair
from src.core.priors import Rng, sample_unit_sphere_batch
from src.core.tensor import Tensor, no_grad
from src.models.base import NetworkRole
from src.models.outputs import MetricReport, MorphWeights
from src.utils.errors import ContractError, DegeneracyError

DEGENERACY_NORM = 1e-9
EVAL_CHUNK = 256


@contextmanager
def inference(*nets: Network) -> Iterator[None]:
    """Evaluation mode and no graph recording for the duration of the block"""
    with ExitStack() as stack:
        for net in nets:
            stack.enter_context(net.evaluation())
        stack.enter_context(no_grad())
        yield


def _run(net: Network, x: np.ndarray) -> np.ndarray:
    if len(x) == 0:
        return np.zeros((0,) + net.output_shape)
    return net(Tensor(x)).numpy()


def _chunked(net: Network, x: np.ndarray) -> np.ndarray:
    parts = [_run(net, x[i : i + EVAL_CHUNK]) for i in range(0, len(x), EVAL_CHUNK)]
    return np.concatenate(parts) if parts else np.zeros((0,) + net.output_shape)


def reconstruct(E: Network, G: Network, x_batch: np.ndarray) -> np.ndarray:
    """G(E(x)) for one batch"""
    if not mirror_check(G, E):
        raise ContractError("generator and encoder are not mirrors")
    x_batch = np.asarray(x_batch)
    if x_batch.shape[1:] != E.input_shape:
        raise ContractError(f"inputs of shape {x_batch.shape[1:]} do not match encoder input {E.input_shape}")
    with inference(E, G):
        return _run(G, _run(E, x_batch))


def encode(E: Network, x_batch: np.ndarray) -> np.ndarray:
    with inference(E):
        return _run(E, np.asarray(x_batch))


def decode(G: Network, z_batch: np.ndarray) -> np.ndarray:
    with inference(G):
        return _run(G, np.asarray(z_batch))


def generate(G: Network, count: int, rng: Rng) -> np.ndarray:
    """`count` samples G(z) with z drawn from the unit-sphere prior"""
    if count < 0:
        raise ContractError(f"count must be non-negative, got {count}")
    z = sample_unit_sphere_batch(count, G.input_shape[0], rng)
    with inference(G):
        return _chunked(G, z)


def morph(anchors: Sequence[np.ndarray] | np.ndarray, weights: MorphWeights | Sequence[float]) -> np.ndarray:
    """Normalized linear combination sum(alpha_i * z_i) / ||.||.

    A combination that uses a single anchor returns that anchor (sign
    applied, renormalized only if it is off the sphere), so corner weights
    reproduce encoder outputs exactly.

    Weights are canonicalized to float32 ratios against the largest
    magnitude before combining, so `c * weights` for any c > 0 yields the
    same ratios and the same output bit for bit. The only exception is a
    ratio within a few float64 ulps of a float32 rounding boundary.
    """
    alphas = np.asarray(weights.alphas if isinstance(weights, MorphWeights) else weights, dtype=np.float64)
    z = np.asarray(anchors, dtype=np.float64)
    if z.ndim != 2 or len(z) != len(alphas):
        raise ContractError(f"need one anchor per weight, got {z.shape} for {len(alphas)} weights")

    scale = np.max(np.abs(alphas))
    if scale == 0.0:
        raise DegeneracyError("all morph weights are zero")

    active = np.flatnonzero(alphas)
    if len(active) == 1:
        k = active[0]
        anchor = np.sign(alphas[k]) * z[k]
        norm = np.linalg.norm(anchor)
        if norm <= DEGENERACY_NORM:
            raise DegeneracyError(f"anchor {k + 1} is the zero vector")
        return anchor if abs(norm - 1.0) <= 1e-6 else anchor / norm

    ratios = (alphas / scale).astype(np.float32).astype(np.float64)
    combination = ratios @ z
    norm = float(np.linalg.norm(combination))
    if norm <= DEGENERACY_NORM:
        raise DegeneracyError(f"latent combination has norm {norm:.3e}")
    return combination / norm


def morph_grid(E: Network, G: Network, four_images: np.ndarray, grid_n: int) -> np.ndarray:
    """grid_n x grid_n cells, row-major; cell (row j, column i) uses the
    bilinear weights of u = i/(grid_n-1), v = j/(grid_n-1)"""
    if grid_n < 2:
        raise ContractError(f"grid_n must be >= 2, got {grid_n}")
    images = np.asarray(four_images)
    if len(images) != 4:
        raise ContractError(f"morph_grid needs exactly 4 images, got {len(images)}")

    corners = reconstruct(E, G, images)
    anchors = encode(E, images)

    cells: dict[tuple[int, int], np.ndarray] = {}
    corner_index = {(0, 0): 0, (grid_n - 1, 0): 1, (0, grid_n - 1): 2, (grid_n - 1, grid_n - 1): 3}
    pending: list[tuple[int, int]] = []
    latents = []
    for j in range(grid_n):
        for i in range(grid_n):
            if (i, j) in corner_index:
                cells[(i, j)] = corners[corner_index[(i, j)]]
                continue
            u, v = i / (grid_n - 1), j / (grid_n - 1)
            try:
                latents.append(morph(anchors, MorphWeights.bilinear(u, v)))
            except DegeneracyError as e:
                raise DegeneracyError(str(e), cell=(j, i)) from e
            pending.append((i, j))

    if pending:
        decoded = decode(G, np.stack(latents))
        for cell, image in zip(pending, decoded):
            cells[cell] = image
    return np.stack([cells[(i, j)] for j in range(grid_n) for i in range(grid_n)])


def latent_path(E: Network, G: Network, x1: np.ndarray, x2: np.ndarray, steps: int) -> np.ndarray:
    """Decoded normalized interpolation between the codes of two samples"""
    if steps < 2:
        raise ContractError(f"steps must be >= 2, got {steps}")
    pair = np.stack([np.asarray(x1), np.asarray(x2)])
    ends = reconstruct(E, G, pair)
    anchors = encode(E, pair)
    inner = [morph(anchors, (1.0 - k / (steps - 1), k / (steps - 1))) for k in range(1, steps - 1)]
    middle = decode(G, np.stack(inner)) if inner else np.zeros((0,) + ends.shape[1:])
    return np.concatenate([ends[:1], middle, ends[1:]])


def _coverage(dataset: Dataset, samples: np.ndarray) -> tuple[Optional[int], Optional[int]]:
    if dataset.modes is not None:
        centers = dataset.modes
        nearest = np.argmin(((samples[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2), axis=1)
        modes = len(centers)
    elif dataset.ring_radii is not None:
        radii = np.asarray(dataset.ring_radii)
        nearest = np.argmin(np.abs(np.linalg.norm(samples, axis=1)[:, None] - radii[None, :]), axis=1)
        modes = len(radii)
    else:
        return None, None
    occupancy = np.bincount(nearest, minlength=modes)
    threshold = len(samples) / (4.0 * modes)
    return int(np.sum(occupancy >= threshold)), modes


def evaluate(E: Network, G: Network, D: Network, dataset: Dataset, count: int, rng: Rng) -> MetricReport:
    """Reconstruction and re-encoding error, discriminator accuracy and mode coverage.

    Real samples are the first `count` dataset samples (all of them when
    the dataset is smaller); as many fakes come from fresh prior draws.
    The discriminator is scored in the space it was trained on (data,
    latent or joint).
    """
    if count < 1:
        raise ContractError(f"count must be >= 1, got {count}")
    n = min(count, len(dataset))
    real = dataset.samples[:n]
    z = sample_unit_sphere_batch(n, G.input_shape[0], rng)

    with inference(E, G, D):
        codes = _chunked(E, real)
        recon = _chunked(G, codes)
        fakes = _chunked(G, z)
        z_hat = _chunked(E, fakes)

        if D.name == NetworkRole.LATENT_DISCRIMINATOR.value:
            real_scores, fake_scores = _chunked(D, z), _chunked(D, codes)
        elif D.name == NetworkRole.JOINT_DISCRIMINATOR.value:
            real_scores = _chunked(D, joint_pair(Tensor(codes), Tensor(real)).numpy())
            fake_scores = _chunked(D, joint_pair(Tensor(z), Tensor(fakes)).numpy())
        else:
            real_scores, fake_scores = _chunked(D, real), _chunked(D, fakes)

    correct = int(np.sum(real_scores > 0.5)) + int(np.sum(fake_scores < 0.5))
    coverage, modes = _coverage(dataset, fakes) if len(dataset.sample_shape) == 1 else (None, None)
    return MetricReport(
        recon_mse=float(np.mean((recon - real) ** 2)),
        reenc_mse=float(np.mean((z_hat - z) ** 2)),
        disc_accuracy=correct / float(len(real_scores) + len(fake_scores)),
        mode_coverage=coverage,
        modes=modes,
        samples_evaluated=n,
    )
