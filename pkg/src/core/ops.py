"""Differentiable operations over `Tensor`.

Each operation is a `Function` subclass with a numpy forward and an analytic
backward; the module-level functions are the public API and perform the shape
and domain checks before anything is recorded.
"""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.core.tensor import Function, Tensor, as_tensor
from src.utils.errors import ContractError, DimensionError, DomainError

ELEMENTWISE_OPS = ("add", "sub", "mul", "log", "negate", "square")


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    return np.asarray(grad.sum()).reshape(shape)


def _scalar_view(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Collapse a single-element operand so it broadcasts as a scalar"""
    if a.shape == b.shape:
        return a, b
    if a.size == 1:
        return a.reshape(()), b
    return a, b.reshape(())


# ---------------------------------------------------------------------------
# elementwise
# ---------------------------------------------------------------------------


class Add(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        self.shapes = (a.shape, b.shape)
        x, y = _scalar_view(a, b)
        return x + y

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        return _unbroadcast(grad, self.shapes[0]), _unbroadcast(grad, self.shapes[1])


class Sub(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        self.shapes = (a.shape, b.shape)
        x, y = _scalar_view(a, b)
        return x - y

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        return _unbroadcast(grad, self.shapes[0]), _unbroadcast(-grad, self.shapes[1])


class Mul(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        self.shapes = (a.shape, b.shape)
        self.a, self.b = _scalar_view(a, b)
        return self.a * self.b

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        return (
            _unbroadcast(grad * self.b, self.shapes[0]),
            _unbroadcast(grad * self.a, self.shapes[1]),
        )


class Neg(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        return -a

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        return (-grad,)


class Log(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        self.a = a
        return np.log(a)

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        return (grad / self.a,)


class Square(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        self.a = a
        return a * a

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        return (2.0 * self.a * grad,)


class Abs(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        self.sign = np.sign(a)
        return np.abs(a)

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        return (grad * self.sign,)


class ClampMin(Function):
    def forward(self, a: np.ndarray, floor: float = 0.0) -> np.ndarray:
        self.passed = a > floor
        return np.maximum(a, np.asarray(floor, dtype=a.dtype))

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        return (grad * self.passed,)


class Sigmoid(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        e = np.exp(-np.abs(a))
        self.out = np.where(a >= 0, 1.0 / (1.0 + e), e / (1.0 + e)).astype(a.dtype, copy=False)
        return self.out

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        return (grad * self.out * (1.0 - self.out),)


class LeakyReLU(Function):
    def forward(self, a: np.ndarray, slope: float = 0.2) -> np.ndarray:
        # subgradient 1 at zero
        self.scale = np.where(a >= 0, 1.0, slope).astype(a.dtype, copy=False)
        return a * self.scale

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        return (grad * self.scale,)


# ---------------------------------------------------------------------------
# linear algebra, reductions, reshaping
# ---------------------------------------------------------------------------


class MatMul(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        self.a, self.b = a, b
        return a @ b

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        return grad @ self.b.T, self.a.T @ grad


class BiasAdd(Function):
    """Adds a per-feature (axis 1) bias to a batch of any rank"""

    def forward(self, x: np.ndarray, bias: np.ndarray) -> np.ndarray:
        self.axes = tuple(i for i in range(x.ndim) if i != 1)
        shape = [1] * x.ndim
        shape[1] = bias.shape[0]
        return x + bias.reshape(shape)

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        return grad, grad.sum(axis=self.axes)


class Sum(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        self.shape = a.shape
        return np.asarray(a.sum())

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        return (np.broadcast_to(grad, self.shape).copy(),)


class Mean(Function):
    def forward(self, a: np.ndarray, axes: Optional[tuple[int, ...]] = None) -> np.ndarray:
        self.shape = a.shape
        self.axes = axes if axes is not None else tuple(range(a.ndim))
        self.count = int(np.prod([a.shape[i] for i in self.axes])) if self.axes else 1
        return np.asarray(a.mean(axis=self.axes))

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        expanded = np.expand_dims(grad, self.axes) if self.axes else grad
        return (np.broadcast_to(expanded / self.count, self.shape).copy(),)


class Reshape(Function):
    def forward(self, a: np.ndarray, shape: tuple[int, ...] = ()) -> np.ndarray:
        self.shape = a.shape
        return a.reshape(shape)

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        return (grad.reshape(self.shape),)


class Concat(Function):
    def forward(self, *arrays: np.ndarray, axis: int = 1) -> np.ndarray:
        self.axis = axis
        self.splits = np.cumsum([a.shape[axis] for a in arrays])[:-1]
        return np.concatenate(arrays, axis=axis)

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        return tuple(np.split(grad, self.splits, axis=self.axis))


class UnitNorm(Function):
    """Row-wise projection onto the unit sphere"""

    def forward(self, a: np.ndarray) -> np.ndarray:
        norm = np.sqrt((a * a).sum(axis=1, keepdims=True))
        self.norm = np.maximum(norm, np.finfo(a.dtype).tiny)
        self.out = a / self.norm
        return self.out

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        radial = (grad * self.out).sum(axis=1, keepdims=True)
        return ((grad - self.out * radial) / self.norm,)


class RowNorm(Function):
    """Euclidean norm of each row; gradient taken as zero at the origin"""

    def forward(self, a: np.ndarray) -> np.ndarray:
        self.a = a
        self.norm = np.sqrt((a * a).sum(axis=1))
        return self.norm

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        safe = np.where(self.norm > 0, self.norm, 1.0)
        scale = np.where(self.norm > 0, grad / safe, 0.0)
        return (self.a * scale[:, None],)


# ---------------------------------------------------------------------------
# spatial
# ---------------------------------------------------------------------------


class Conv2d(Function):
    """Zero-padded cross-correlation via im2col"""

    def forward(
        self,
        x: np.ndarray,
        kernel: np.ndarray,
        bias: np.ndarray,
        stride: int = 1,
        padding: int = 0,
    ) -> np.ndarray:
        n, c, h, w = x.shape
        o, _, k, _ = kernel.shape
        self.x_shape = x.shape
        self.kernel_shape = kernel.shape
        self.stride, self.padding = stride, padding

        padded = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding))) if padding else x
        windows = sliding_window_view(padded, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]
        ho, wo = windows.shape[2], windows.shape[3]
        self.out_hw = (ho, wo)

        self.cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(n * ho * wo, c * k * k)
        self.kmat = kernel.reshape(o, c * k * k)
        out = self.cols @ self.kmat.T + bias
        return np.ascontiguousarray(out.reshape(n, ho, wo, o).transpose(0, 3, 1, 2))

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        n, c, h, w = self.x_shape
        o, _, k, _ = self.kernel_shape
        ho, wo = self.out_hw
        s, p = self.stride, self.padding

        g2 = grad.transpose(0, 2, 3, 1).reshape(-1, o)
        dkernel = (g2.T @ self.cols).reshape(self.kernel_shape)
        dbias = g2.sum(axis=0)
        dcols = (g2 @ self.kmat).reshape(n, ho, wo, c, k, k)

        dpadded = np.zeros((n, c, h + 2 * p, w + 2 * p), dtype=grad.dtype)
        for i in range(k):
            for j in range(k):
                dpadded[:, :, i : i + s * ho : s, j : j + s * wo : s] += dcols[..., i, j].transpose(0, 3, 1, 2)
        return dpadded[:, :, p : p + h, p : p + w], dkernel, dbias


class Upsample2d(Function):
    """Nearest-neighbour replication; backward sums each block"""

    def forward(self, x: np.ndarray, factor: int = 2) -> np.ndarray:
        self.factor = factor
        return x.repeat(factor, axis=2).repeat(factor, axis=3)

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        n, c, h, w = grad.shape
        f = self.factor
        return (grad.reshape(n, c, h // f, f, w // f, f).sum(axis=(3, 5)),)


class MaxPool2d(Function):
    """Window maximum; ties resolve to the first index in row-major order"""

    def forward(self, x: np.ndarray, window: int = 2, stride: int = 2) -> np.ndarray:
        n, c, _, _ = x.shape
        self.x_shape = x.shape
        self.window, self.stride = window, stride
        windows = sliding_window_view(x, (window, window), axis=(2, 3))[:, :, ::stride, ::stride]
        ho, wo = windows.shape[2], windows.shape[3]
        flat = windows.reshape(n, c, ho, wo, window * window)
        self.argmax = flat.argmax(axis=-1)
        return np.take_along_axis(flat, self.argmax[..., None], axis=-1)[..., 0]

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        n, c, ho, wo = grad.shape
        rows = np.arange(ho)[:, None] * self.stride + self.argmax // self.window
        cols = np.arange(wo)[None, :] * self.stride + self.argmax % self.window
        batch = np.arange(n)[:, None, None, None]
        chan = np.arange(c)[None, :, None, None]
        dx = np.zeros(self.x_shape, dtype=grad.dtype)
        np.add.at(dx, (batch, chan, rows, cols), grad)
        return (dx,)


class BatchNormTrain(Function):
    """Normalization by batch statistics over every axis but the channel axis"""

    def forward(self, x: np.ndarray, gamma: np.ndarray, beta: np.ndarray, eps: float = 1e-5) -> np.ndarray:
        self.axes = tuple(i for i in range(x.ndim) if i != 1)
        shape = [1] * x.ndim
        shape[1] = x.shape[1]
        self.param_shape = tuple(shape)
        self.count = x.size // x.shape[1]

        mean = x.mean(axis=self.axes, keepdims=True)
        var = x.var(axis=self.axes, keepdims=True)
        self.inv_std = 1.0 / np.sqrt(var + eps)
        self.xhat = (x - mean) * self.inv_std
        self.gamma = gamma.reshape(self.param_shape)
        return self.gamma * self.xhat + beta.reshape(self.param_shape)

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        dbeta = grad.sum(axis=self.axes)
        dgamma = (grad * self.xhat).sum(axis=self.axes)
        dxhat = grad * self.gamma
        m = self.count
        dx = (self.inv_std / m) * (
            m * dxhat
            - dxhat.sum(axis=self.axes, keepdims=True)
            - self.xhat * (dxhat * self.xhat).sum(axis=self.axes, keepdims=True)
        )
        return dx, dgamma, dbeta


class BatchNormEval(Function):
    """Affine map with frozen running statistics"""

    def forward(
        self,
        x: np.ndarray,
        gamma: np.ndarray,
        beta: np.ndarray,
        mean: np.ndarray,
        var: np.ndarray,
        eps: float = 1e-5,
    ) -> np.ndarray:
        self.axes = tuple(i for i in range(x.ndim) if i != 1)
        shape = [1] * x.ndim
        shape[1] = x.shape[1]
        self.inv_std = (1.0 / np.sqrt(var + eps)).reshape(shape).astype(x.dtype, copy=False)
        self.xhat = (x - mean.reshape(shape)) * self.inv_std
        self.gamma = gamma.reshape(shape)
        return self.gamma * self.xhat + beta.reshape(shape)

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        return (
            grad * self.gamma * self.inv_std,
            (grad * self.xhat).sum(axis=self.axes),
            grad.sum(axis=self.axes),
        )


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------


def _check_binary(name: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape and a.size != 1 and b.size != 1:
        raise DimensionError(f"{name}: operands must have identical shapes or one must be a scalar", a.shape, b.shape)


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_binary("add", a, b)
    return Add.apply(a, b)


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_binary("sub", a, b)
    return Sub.apply(a, b)


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_binary("mul", a, b)
    return Mul.apply(a, b)


def negate(a: Tensor) -> Tensor:
    return Neg.apply(a)


def log(a: Tensor) -> Tensor:
    if a.size == 0 or not np.all(a.data > 0):
        raise DomainError("log is only defined for strictly positive inputs")
    return Log.apply(a)


def square(a: Tensor) -> Tensor:
    return Square.apply(a)


def absolute(a: Tensor) -> Tensor:
    return Abs.apply(a)


def clamp_min(a: Tensor, floor: float) -> Tensor:
    return ClampMin.apply(a, floor=floor)


def safe_log(a: Tensor, floor: float = 1e-7) -> Tensor:
    """log(max(a, floor)); the clamping policy used by every loss"""
    return log(clamp_min(a, floor))


def elementwise(op: str, a: Tensor, b: Optional[Tensor] = None) -> Tensor:
    """Dispatch one of add, sub, mul, log, negate, square"""
    binary = {"add": add, "sub": sub, "mul": mul}
    unary = {"log": log, "negate": negate, "square": square}
    if op in binary:
        if b is None:
            raise ContractError(f"elementwise '{op}' needs two operands")
        return binary[op](a, as_tensor(b))
    if op in unary:
        if b is not None:
            raise ContractError(f"elementwise '{op}' takes a single operand")
        return unary[op](a)
    raise ContractError(f"unknown elementwise op '{op}', expected one of {ELEMENTWISE_OPS}")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError("matmul: inner dimensions must agree", a.shape, b.shape)
    return MatMul.apply(a, b)


def bias_add(x: Tensor, bias: Tensor) -> Tensor:
    if x.ndim < 2 or bias.ndim != 1 or x.shape[1] != bias.shape[0]:
        raise DimensionError("bias_add: bias must match axis 1", x.shape, bias.shape)
    return BiasAdd.apply(x, bias)


def reduce_sum(a: Tensor) -> Tensor:
    return Sum.apply(a)


def reduce_mean(a: Tensor, axes: Optional[Sequence[int]] = None) -> Tensor:
    if a.size == 0:
        raise DomainError("mean of an empty tensor")
    normalized: Optional[tuple[int, ...]] = None
    if axes is not None:
        normalized = tuple(sorted({ax % a.ndim if a.ndim else ax for ax in axes}))
        if any(ax < 0 or ax >= a.ndim for ax in axes if ax >= 0) or any(ax < -a.ndim for ax in axes):
            raise ContractError(f"reduce_mean: axes {tuple(axes)} invalid for shape {a.shape}")
    return Mean.apply(a, axes=normalized)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    target = tuple(int(d) for d in shape)
    known = [d for d in target if d != -1]
    if target.count(-1) > 1 or (target.count(-1) == 0 and int(np.prod(target)) != a.size):
        raise DimensionError("reshape: element count mismatch", a.shape, target)
    if target.count(-1) == 1 and (not known or a.size % int(np.prod(known)) != 0) and a.size != 0:
        raise DimensionError("reshape: element count mismatch", a.shape, target)
    return Reshape.apply(a, shape=target)


def flatten(a: Tensor) -> Tensor:
    """Collapse every axis after the batch axis"""
    return reshape(a, (a.shape[0], int(np.prod(a.shape[1:])) if a.ndim > 1 else 1))


def concat(tensors: Sequence[Tensor], axis: int = 1) -> Tensor:
    first = tensors[0]
    for t in tensors[1:]:
        if t.ndim != first.ndim or any(
            t.shape[i] != first.shape[i] for i in range(first.ndim) if i != axis
        ):
            raise DimensionError("concat: shapes disagree off the concatenation axis", first.shape, t.shape)
    return Concat.apply(*tensors, axis=axis)


def sigmoid(a: Tensor) -> Tensor:
    return Sigmoid.apply(a)


def leaky_relu(a: Tensor, slope: float = 0.2) -> Tensor:
    if not 0.0 <= slope < 1.0:
        raise ContractError(f"leaky_relu slope must lie in [0, 1), got {slope}")
    return LeakyReLU.apply(a, slope=slope)


def unit_norm(a: Tensor) -> Tensor:
    if a.ndim != 2:
        raise DimensionError("unit_norm expects a batch of vectors", a.shape)
    return UnitNorm.apply(a)


def row_norm(a: Tensor) -> Tensor:
    if a.ndim != 2:
        raise DimensionError("row_norm expects a batch of vectors", a.shape)
    return RowNorm.apply(a)


def conv2d(x: Tensor, kernel: Tensor, bias: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    if x.ndim != 4 or kernel.ndim != 4 or kernel.shape[2] != kernel.shape[3]:
        raise DimensionError("conv2d expects x[batch,c,h,w] and a square kernel[out,c,k,k]", x.shape, kernel.shape)
    if x.shape[1] != kernel.shape[1]:
        raise DimensionError("conv2d: input channels disagree with kernel", x.shape, kernel.shape)
    if bias.shape != (kernel.shape[0],):
        raise DimensionError("conv2d: bias must have one entry per output channel", bias.shape, kernel.shape)
    if stride < 1 or padding < 0:
        raise ContractError(f"conv2d: stride must be >= 1 and padding >= 0, got {stride}, {padding}")
    k = kernel.shape[2]
    if x.shape[2] + 2 * padding < k or x.shape[3] + 2 * padding < k:
        raise DimensionError("conv2d: kernel larger than padded input", x.shape, kernel.shape)
    return Conv2d.apply(x, kernel, bias, stride=stride, padding=padding)


def upsample2d(x: Tensor, factor: int) -> Tensor:
    if factor < 1:
        raise ContractError(f"upsample2d factor must be >= 1, got {factor}")
    if x.ndim != 4:
        raise DimensionError("upsample2d expects x[batch,c,h,w]", x.shape)
    return Upsample2d.apply(x, factor=factor)


def maxpool2d(x: Tensor, window: int, stride: Optional[int] = None) -> Tensor:
    stride = window if stride is None else stride
    if window < 1 or stride < 1:
        raise ContractError(f"maxpool2d window and stride must be >= 1, got {window}, {stride}")
    if x.ndim != 4 or window > x.shape[2] or window > x.shape[3]:
        raise DimensionError(f"maxpool2d: window {window} exceeds spatial dims", x.shape)
    return MaxPool2d.apply(x, window=window, stride=stride)


def batchnorm_train(x: Tensor, gamma: Tensor, beta: Tensor, eps: float) -> Tensor:
    return BatchNormTrain.apply(x, gamma, beta, eps=eps)


def batchnorm_eval(
    x: Tensor, gamma: Tensor, beta: Tensor, mean: np.ndarray, var: np.ndarray, eps: float
) -> Tensor:
    return BatchNormEval.apply(x, gamma, beta, mean=mean, var=var, eps=eps)
