"""Network building blocks.

A layer is created from its `LayerSpec`, then `build` fixes its per-sample
input shape, validates it, creates parameters and returns the output shape.
Shapes exclude the batch axis; images are channel-first.
"""
from __future__ import annotations

import math
from typing import Any, Optional

import numpy as np

from src.core import ops
from src.core.priors import Rng
from src.core.tensor import Tensor, get_default_dtype
from src.models.base import LayerKind
from src.models.specs import LayerSpec
from src.utils.errors import ContractError, SpecError

Shape = tuple[int, ...]


def glorot_uniform(shape: Shape, fan_in: int, fan_out: int, rng: Optional[Rng]) -> np.ndarray:
    """U(-sqrt(6/(fan_in+fan_out)), +...); zeros when no rng is given (checkpoint loading)"""
    if rng is None:
        return np.zeros(shape)
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform_array(shape, -limit, limit)


class Layer:
    """Base layer; subclasses set `kind` and override the hooks they need"""

    kind: LayerKind

    def __init__(self, spec: LayerSpec):
        if spec.kind != self.kind:
            raise SpecError(f"{type(self).__name__} cannot build a '{spec.kind.value}' layer")
        self.spec = spec
        self.params: dict[str, Tensor] = {}
        self.buffers: dict[str, np.ndarray] = {}
        self.input_shape: Optional[Shape] = None
        self.output_shape: Optional[Shape] = None

    def output_shape_for(self, input_shape: Shape) -> Shape:
        return input_shape

    def build(self, input_shape: Shape, rng: Optional[Rng] = None) -> Shape:
        self.input_shape = tuple(input_shape)
        self.output_shape = self.output_shape_for(self.input_shape)
        self._init_params(rng)
        return self.output_shape

    def _init_params(self, rng: Optional[Rng]) -> None:
        pass

    def _param(self, name: str, values: np.ndarray) -> None:
        self.params[name] = Tensor(values, requires_grad=True, name=name, dtype=get_default_dtype())

    def _required(self, field: str) -> Any:
        value = getattr(self.spec, field)
        if value is None:
            raise SpecError(f"{self.kind.value} layer needs '{field}'")
        return value

    def _built(self) -> tuple[Shape, Shape]:
        if self.input_shape is None or self.output_shape is None:
            raise ContractError(f"{self.kind.value} layer used before build()")
        return self.input_shape, self.output_shape

    def forward(self, x: Tensor, training: bool) -> Tensor:
        raise NotImplementedError


class Dense(Layer):
    kind = LayerKind.DENSE

    def output_shape_for(self, input_shape: Shape) -> Shape:
        if len(input_shape) != 1:
            raise SpecError(f"dense layer needs flat input, got {input_shape}")
        return (self._required("units"),)

    def _init_params(self, rng: Optional[Rng]) -> None:
        fan_in, fan_out = self._built()[0][0], self._required("units")
        self._param("weight", glorot_uniform((fan_in, fan_out), fan_in, fan_out, rng))
        self._param("bias", np.zeros(fan_out))

    def forward(self, x: Tensor, training: bool) -> Tensor:
        return dense_forward(x, self.params["weight"], self.params["bias"])


class Conv2D(Layer):
    kind = LayerKind.CONV2D

    def output_shape_for(self, input_shape: Shape) -> Shape:
        if len(input_shape) != 3:
            raise SpecError(f"conv2d needs (c, h, w) input, got {input_shape}")
        _, h, w = input_shape
        k, s, p = self.spec.kernel_size, self.spec.stride, self.spec.padding
        if h + 2 * p < k or w + 2 * p < k:
            raise SpecError(f"kernel {k} larger than padded input {input_shape}")
        return (self._required("channels"), (h + 2 * p - k) // s + 1, (w + 2 * p - k) // s + 1)

    def _init_params(self, rng: Optional[Rng]) -> None:
        c_in, c_out, k = self._built()[0][0], self._required("channels"), self.spec.kernel_size
        self._param("kernel", glorot_uniform((c_out, c_in, k, k), c_in * k * k, c_out * k * k, rng))
        self._param("bias", np.zeros(c_out))

    def forward(self, x: Tensor, training: bool) -> Tensor:
        return conv2d_forward(x, self.params["kernel"], self.params["bias"], self.spec.stride, self.spec.padding)


class Upsample2D(Layer):
    kind = LayerKind.UPSAMPLE2D

    def output_shape_for(self, input_shape: Shape) -> Shape:
        if len(input_shape) != 3:
            raise SpecError(f"upsample2d needs (c, h, w) input, got {input_shape}")
        c, h, w = input_shape
        return (c, h * self.spec.factor, w * self.spec.factor)

    def forward(self, x: Tensor, training: bool) -> Tensor:
        return upsample2d_forward(x, self.spec.factor)


class MaxPool2D(Layer):
    kind = LayerKind.MAXPOOL2D

    def output_shape_for(self, input_shape: Shape) -> Shape:
        if len(input_shape) != 3:
            raise SpecError(f"maxpool2d needs (c, h, w) input, got {input_shape}")
        c, h, w = input_shape
        win, s = self.spec.window, self.spec.stride
        if win > h or win > w:
            raise SpecError(f"pool window {win} exceeds spatial dims of {input_shape}")
        return (c, (h - win) // s + 1, (w - win) // s + 1)

    def forward(self, x: Tensor, training: bool) -> Tensor:
        return maxpool2d_forward(x, self.spec.window, self.spec.stride)


class BatchNorm(Layer):
    """Per-channel normalization; running statistics are buffers, not parameters"""

    kind = LayerKind.BATCHNORM

    def output_shape_for(self, input_shape: Shape) -> Shape:
        if len(input_shape) not in (1, 3):
            raise SpecError(f"batchnorm needs (features,) or (c, h, w) input, got {input_shape}")
        return input_shape

    def _init_params(self, rng: Optional[Rng]) -> None:
        channels = self._built()[0][0]
        self._param("gamma", np.ones(channels))
        self._param("beta", np.zeros(channels))
        dtype = get_default_dtype()
        self.buffers["running_mean"] = np.zeros(channels, dtype=dtype)
        self.buffers["running_var"] = np.ones(channels, dtype=dtype)

    def forward(self, x: Tensor, training: bool) -> Tensor:
        return batchnorm_forward(
            x,
            self.params["gamma"],
            self.params["beta"],
            self.buffers,
            training,
            momentum=self.spec.momentum,
            eps=self.spec.eps,
        )


class LeakyReLU(Layer):
    kind = LayerKind.LEAKY_RELU

    def forward(self, x: Tensor, training: bool) -> Tensor:
        return leaky_relu_forward(x, self.spec.slope)


class Sigmoid(Layer):
    kind = LayerKind.SIGMOID

    def forward(self, x: Tensor, training: bool) -> Tensor:
        return sigmoid_forward(x)


class Flatten(Layer):
    kind = LayerKind.FLATTEN

    def output_shape_for(self, input_shape: Shape) -> Shape:
        return (int(np.prod(input_shape)),)

    def forward(self, x: Tensor, training: bool) -> Tensor:
        return ops.flatten(x)


class Reshape(Layer):
    kind = LayerKind.RESHAPE

    def output_shape_for(self, input_shape: Shape) -> Shape:
        target = tuple(self._required("target_shape"))
        if int(np.prod(target)) != int(np.prod(input_shape)):
            raise SpecError(f"cannot reshape {input_shape} to {target}")
        return target

    def forward(self, x: Tensor, training: bool) -> Tensor:
        return ops.reshape(x, (x.shape[0],) + self._built()[1])


class UnitNorm(Layer):
    """Projects each sample onto the unit sphere"""

    kind = LayerKind.UNIT_NORM

    def output_shape_for(self, input_shape: Shape) -> Shape:
        if len(input_shape) != 1:
            raise SpecError(f"unit_norm needs flat input, got {input_shape}")
        return input_shape

    def forward(self, x: Tensor, training: bool) -> Tensor:
        return ops.unit_norm(x)


def dense_forward(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """x @ W + b"""
    return ops.bias_add(ops.matmul(x, weight), bias)


def conv2d_forward(x: Tensor, kernel: Tensor, bias: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """Cross-correlation of channel-first images with (c_out, c_in, k, k) kernels"""
    return ops.conv2d(x, kernel, bias, stride, padding)


def upsample2d_forward(x: Tensor, factor: int) -> Tensor:
    """Nearest-neighbor upsampling by an integer factor"""
    return ops.upsample2d(x, factor)


def maxpool2d_forward(x: Tensor, window: int, stride: Optional[int] = None) -> Tensor:
    return ops.maxpool2d(x, window, stride)


def leaky_relu_forward(x: Tensor, slope: float = 0.2) -> Tensor:
    return ops.leaky_relu(x, slope)


def sigmoid_forward(x: Tensor) -> Tensor:
    return ops.sigmoid(x)


def batchnorm_forward(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_stats: dict[str, np.ndarray],
    training: bool,
    momentum: float = 0.99,
    eps: float = 1e-5,
) -> Tensor:
    """Batch statistics in training (updating the running stats in place),
    running statistics in evaluation"""
    if x.ndim not in (2, 4) or x.shape[1] != gamma.shape[0]:
        raise ContractError(f"batchnorm input {x.shape} does not match {gamma.shape[0]} channels")
    if not training:
        return ops.batchnorm_eval(x, gamma, beta, running_stats["running_mean"], running_stats["running_var"], eps)

    if x.shape[0] < 2:
        raise ContractError(f"batchnorm in training mode needs a batch of at least 2, got {x.shape[0]}")
    axes = tuple(i for i in range(x.ndim) if i != 1)
    mean = x.data.mean(axis=axes)
    var = x.data.var(axis=axes)
    for key, batch_value in (("running_mean", mean), ("running_var", var)):
        buf = running_stats[key]
        buf[...] = momentum * buf + (1.0 - momentum) * batch_value
    return ops.batchnorm_train(x, gamma, beta, eps)
