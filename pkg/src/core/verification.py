"""Randomized gradient suite behind the `gradcheck` command.

Each op kind has an instance generator that draws small shapes and values
from a seeded Rng and returns the scalar function plus the leaves to
perturb. Values are drawn away from kinks (zero for leaky_relu, ties for
maxpool, the log floor for the adversarial terms) so central differences
are meaningful at eps = 1e-4.
"""
from __future__ import annotations

import time
from typing import Callable, Optional, Sequence

import numpy as np

from src.core import ops
from src.core.gradcheck import grad_check_params
from src.core.layers import (
    batchnorm_forward,
    conv2d_forward,
    dense_forward,
    leaky_relu_forward,
    maxpool2d_forward,
    sigmoid_forward,
    upsample2d_forward,
)
from src.core.network import Network
from src.core.objectives import faae_value, gan_value, reconstruction_loss, reencoding_loss
from src.core.priors import Rng
from src.core.tensor import Tensor, verification_mode
from src.models.base import LayerKind, LossNorm, NetworkRole
from src.models.outputs import GradCheckResult
from src.models.specs import LayerSpec
from src.utils.errors import ContractError
from src.utils.logger import get_logger

logger = get_logger("verification")

Instance = tuple[Callable[[], Tensor], list[Tensor]]


def _leaf(array: np.ndarray, name: str) -> Tensor:
    return Tensor(array, requires_grad=True, name=name, dtype=np.float64)


def _uniform(rng: Rng, shape: Sequence[int], low: float = -1.0, high: float = 1.0) -> np.ndarray:
    return rng.uniform_array(tuple(shape), low, high)


def _away_from_zero(rng: Rng, shape: Sequence[int], low: float = 0.1) -> np.ndarray:
    magnitude = _uniform(rng, shape, low, 1.0)
    sign = np.where(_uniform(rng, shape) < 0, -1.0, 1.0)
    return magnitude * sign


def _distinct(rng: Rng, shape: Sequence[int]) -> np.ndarray:
    """Values in [-1, 1) with pairwise gaps of at least 2/size"""
    size = int(np.prod(shape))
    return (rng.permutation(size).astype(np.float64) * 2.0 / size - 1.0).reshape(shape)


def _weighted_sum(out: Tensor, weights: np.ndarray) -> Tensor:
    """Scalar projection of a tensor output with fixed random weights"""
    return ops.reduce_sum(ops.mul(out, Tensor(weights, dtype=np.float64)))


def _projection(rng: Rng, out_shape: Sequence[int]) -> np.ndarray:
    return _uniform(rng, out_shape, 0.5, 1.5)


# -- instance generators --------------------------------------------------
def _matmul(rng: Rng) -> Instance:
    b, i, o = 1 + rng.integer(4), 1 + rng.integer(4), 1 + rng.integer(4)
    a = _leaf(_uniform(rng, (b, i)), "a")
    w = _leaf(_uniform(rng, (i, o)), "b")
    proj = _projection(rng, (b, o))
    return lambda: _weighted_sum(ops.matmul(a, w), proj), [a, w]


def _dense(rng: Rng) -> Instance:
    b, i, o = 1 + rng.integer(4), 1 + rng.integer(4), 1 + rng.integer(4)
    x = _leaf(_uniform(rng, (b, i)), "x")
    w = _leaf(_uniform(rng, (i, o)), "weight")
    bias = _leaf(_uniform(rng, (o,)), "bias")
    proj = _projection(rng, (b, o))
    return lambda: _weighted_sum(dense_forward(x, w, bias), proj), [x, w, bias]


def _conv2d(rng: Rng) -> Instance:
    b, c_in, c_out = 1 + rng.integer(2), 1 + rng.integer(2), 1 + rng.integer(2)
    k = 1 + rng.integer(3)
    stride = 1 + rng.integer(2)
    padding = rng.integer(2)
    size = k + rng.integer(3)
    x = _leaf(_uniform(rng, (b, c_in, size, size)), "x")
    kernel = _leaf(_uniform(rng, (c_out, c_in, k, k)), "kernel")
    bias = _leaf(_uniform(rng, (c_out,)), "bias")
    out_size = (size + 2 * padding - k) // stride + 1
    proj = _projection(rng, (b, c_out, out_size, out_size))
    return lambda: _weighted_sum(conv2d_forward(x, kernel, bias, stride, padding), proj), [x, kernel, bias]


def _upsample2d(rng: Rng) -> Instance:
    b, c, size, factor = 1 + rng.integer(2), 1 + rng.integer(2), 1 + rng.integer(3), 1 + rng.integer(3)
    x = _leaf(_uniform(rng, (b, c, size, size)), "x")
    proj = _projection(rng, (b, c, size * factor, size * factor))
    return lambda: _weighted_sum(upsample2d_forward(x, factor), proj), [x]


def _maxpool2d(rng: Rng) -> Instance:
    b, c, window = 1 + rng.integer(2), 1 + rng.integer(2), 1 + rng.integer(2)
    cells = 1 + rng.integer(3)
    x = _leaf(_distinct(rng, (b, c, window * cells, window * cells)), "x")
    proj = _projection(rng, (b, c, cells, cells))
    return lambda: _weighted_sum(maxpool2d_forward(x, window, window), proj), [x]


def _batchnorm(rng: Rng) -> Instance:
    b, c = 2 + rng.integer(3), 1 + rng.integer(3)
    shape = (b, c) if rng.integer(2) == 0 else (b, c, 2, 2)
    x = _leaf(_distinct(rng, shape), "x")
    gamma = _leaf(_uniform(rng, (c,), 0.5, 1.5), "gamma")
    beta = _leaf(_uniform(rng, (c,)), "beta")
    proj = _projection(rng, shape)
    training = rng.integer(2) == 0
    stats = {"running_mean": _uniform(rng, (c,)), "running_var": _uniform(rng, (c,), 0.5, 1.5)}

    def f() -> Tensor:
        # a copy keeps running statistics fixed across evaluations
        frozen_stats = {k: v.copy() for k, v in stats.items()}
        return _weighted_sum(batchnorm_forward(x, gamma, beta, frozen_stats, training), proj)

    return f, [x, gamma, beta]


def _leaky_relu(rng: Rng) -> Instance:
    shape = (1 + rng.integer(4), 1 + rng.integer(4))
    slope = float(_uniform(rng, (1,), 0.0, 0.5)[0])
    x = _leaf(_away_from_zero(rng, shape), "x")
    proj = _projection(rng, shape)
    return lambda: _weighted_sum(leaky_relu_forward(x, slope), proj), [x]


def _sigmoid(rng: Rng) -> Instance:
    shape = (1 + rng.integer(4), 1 + rng.integer(4))
    x = _leaf(_uniform(rng, shape, -4.0, 4.0), "x")
    proj = _projection(rng, shape)
    return lambda: _weighted_sum(sigmoid_forward(x), proj), [x]


def _elementwise(rng: Rng) -> Instance:
    op = ops.ELEMENTWISE_OPS[rng.integer(len(ops.ELEMENTWISE_OPS))]
    shape = (1 + rng.integer(3), 1 + rng.integer(3))
    low = 0.5 if op == "log" else -1.0
    a = _leaf(_uniform(rng, shape, low, 2.0), "a")
    proj = _projection(rng, shape)
    if op in ("add", "sub", "mul"):
        b = _leaf(_uniform(rng, shape), "b")
        return lambda: _weighted_sum(ops.elementwise(op, a, b), proj), [a, b]
    return lambda: _weighted_sum(ops.elementwise(op, a), proj), [a]


def _reduce_mean(rng: Rng) -> Instance:
    shape = (1 + rng.integer(3), 1 + rng.integer(3), 1 + rng.integer(3))
    axes: Optional[tuple[int, ...]] = None
    if rng.integer(2) == 0:
        axes = tuple(ax for ax in range(3) if rng.integer(2) == 0) or (0,)
    x = _leaf(_uniform(rng, shape), "x")
    out_shape = tuple(d for ax, d in enumerate(shape) if axes is not None and ax not in axes)
    proj = _projection(rng, out_shape)
    return lambda: _weighted_sum(ops.reduce_mean(x, axes), proj), [x]


def _unit_norm(rng: Rng) -> Instance:
    shape = (1 + rng.integer(3), 2 + rng.integer(3))
    x = _leaf(_away_from_zero(rng, shape, 0.3), "x")
    proj = _projection(rng, shape)
    return lambda: _weighted_sum(ops.unit_norm(x), proj), [x]


def _norm(rng: Rng) -> LossNorm:
    return list(LossNorm)[rng.integer(len(LossNorm))]


def _reencoding_loss(rng: Rng) -> Instance:
    shape = (1 + rng.integer(4), 1 + rng.integer(4))
    norm = _norm(rng)
    z_data = _uniform(rng, shape)
    z = _leaf(z_data, "z")
    z_hat = _leaf(z_data + _away_from_zero(rng, shape), "z_hat")
    return lambda: reencoding_loss(z, z_hat, norm), [z, z_hat]


def _reconstruction_loss(rng: Rng) -> Instance:
    shape = (1 + rng.integer(2), 1 + rng.integer(3), 1 + rng.integer(3), 1 + rng.integer(3))
    norm = _norm(rng)
    x_data = _uniform(rng, shape, 0.0, 1.0)
    x = _leaf(x_data, "x")
    x_hat = _leaf(x_data + _away_from_zero(rng, shape), "x_hat")
    return lambda: reconstruction_loss(x, x_hat, norm), [x, x_hat]


def _gan_value(rng: Rng) -> Instance:
    b = 1 + rng.integer(4)
    d_real = _leaf(_uniform(rng, (b, 1), 0.05, 0.95), "d_real")
    d_fake = _leaf(_uniform(rng, (b, 1), 0.05, 0.95), "d_fake")
    w_d, w_g = _uniform(rng, (2,), 0.5, 1.5)

    def f() -> Tensor:
        adv_d, adv_g = gan_value(d_real, d_fake)
        return ops.add(ops.mul(adv_d, Tensor(w_d)), ops.mul(adv_g, Tensor(w_g)))

    return f, [d_real, d_fake]


def _smooth_net(name: str, input_dim: int, hidden: int, out_units: int, head: list[LayerSpec], rng: Rng) -> Network:
    specs = [
        LayerSpec(kind=LayerKind.DENSE, units=hidden),
        LayerSpec(kind=LayerKind.SIGMOID),
        LayerSpec(kind=LayerKind.DENSE, units=out_units),
    ] + head
    return Network.from_specs(name, (input_dim,), specs, rng)


def _faae_value(rng: Rng) -> Instance:
    """Composite check over every parameter of tiny G, E and D"""
    n, d, hidden, b = 2, 2 + rng.integer(2), 2 + rng.integer(2), 2 + rng.integer(3)
    G = _smooth_net(NetworkRole.GENERATOR.value, n, hidden, d, [], rng)
    E = _smooth_net(NetworkRole.ENCODER.value, d, hidden, n, [LayerSpec(kind=LayerKind.UNIT_NORM)], rng)
    D = _smooth_net(NetworkRole.DISCRIMINATOR.value, d, hidden, 1, [LayerSpec(kind=LayerKind.SIGMOID)], rng)
    x = Tensor(_uniform(rng, (b, d)), dtype=np.float64)
    z = Tensor(_away_from_zero(rng, (b, n), 0.3), dtype=np.float64)
    alpha = float(_uniform(rng, (1,), 0.0, 2.0)[0])
    norm = (LossNorm.L2SQ, LossNorm.L2)[rng.integer(2)]

    def f() -> Tensor:
        report = faae_value(G, E, D, x, z, alpha, weight_adv=0.1, norm=norm)
        return ops.add(report.terms["total"], report.terms["adv_d"])

    tensors = list(G.params.values()) + list(E.params.values()) + list(D.params.values())
    return f, tensors


GENERATORS: dict[str, Callable[[Rng], Instance]] = {
    "matmul": _matmul,
    "conv2d": _conv2d,
    "upsample2d": _upsample2d,
    "maxpool2d": _maxpool2d,
    "batchnorm": _batchnorm,
    "leaky_relu": _leaky_relu,
    "sigmoid": _sigmoid,
    "dense": _dense,
    "reencoding_loss": _reencoding_loss,
    "reconstruction_loss": _reconstruction_loss,
    "gan_value": _gan_value,
    "faae_value": _faae_value,
    "elementwise": _elementwise,
    "reduce_mean": _reduce_mean,
    "unit_norm": _unit_norm,
}
OP_KINDS: tuple[str, ...] = tuple(GENERATORS)


def check_op(op: str, instances: int = 100, eps: float = 1e-4, tolerance: float = 1e-4, seed: int = 0) -> GradCheckResult:
    """Worst relative error of one op kind over `instances` random draws"""
    if op not in GENERATORS:
        raise ContractError(f"unknown op kind '{op}', expected one of {', '.join(OP_KINDS)}")
    if instances < 1:
        raise ContractError(f"instances must be >= 1, got {instances}")
    rng = Rng(seed).derive(op)
    worst = 0.0
    with verification_mode():
        for _ in range(instances):
            f, tensors = GENERATORS[op](rng)
            worst = max(worst, grad_check_params(f, tensors, eps))
    return GradCheckResult(op=op, instances=instances, max_error=worst, tolerance=tolerance)


def run_suite(
    ops_to_check: Optional[Sequence[str]] = None,
    instances: int = 100,
    eps: float = 1e-4,
    tolerance: float = 1e-4,
    seed: int = 0,
) -> list[GradCheckResult]:
    """Check each requested op kind (all by default) and return one result per kind"""
    selected = list(ops_to_check) if ops_to_check else list(OP_KINDS)
    unknown = [op for op in selected if op not in GENERATORS]
    if unknown:
        raise ContractError(f"unknown op kind(s): {', '.join(unknown)}; expected one of {', '.join(OP_KINDS)}")

    results = []
    for op in selected:
        started = time.perf_counter()
        result = check_op(op, instances, eps, tolerance, seed)
        level = "debug" if result.passed else "warning"
        getattr(logger, level)(
            f"gradcheck {op}: max error {result.max_error:.3e} over {instances} instances "
            f"({time.perf_counter() - started:.2f}s)"
        )
        results.append(result)
    return results
