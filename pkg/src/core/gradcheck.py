"""Central finite-difference gradient checks in 64-bit mode"""
from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from src.core.tensor import Tensor, no_grad, reset_graph, verification_mode
from src.utils.errors import ContractError, NumericalError


def _relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(1.0, abs(analytic), abs(numeric))


def grad_check_params(
    f: Callable[[], Tensor],
    tensors: Sequence[Tensor],
    eps: float = 1e-4,
) -> float:
    """Max relative error between backward() and central differences.

    `f` is re-evaluated with each coordinate of each tensor nudged by ±eps,
    so it must read the tensors' current `.data`. Tensors must be float64
    leaves; their values are restored after every perturbation.
    """
    if eps <= 0:
        raise ContractError(f"eps must be positive, got {eps}")
    for t in tensors:
        if t.data.dtype != np.float64:
            raise ContractError(f"grad_check needs float64 tensors, got {t.data.dtype} for {t.name or 'tensor'}")
        if not t.is_leaf:
            raise ContractError("grad_check perturbs leaves only")

    with verification_mode():
        reset_graph()
        saved = [(t.requires_grad, t.grad) for t in tensors]
        for t in tensors:
            t.requires_grad = True
            t.zero_grad()
        try:
            loss = f()
            if not np.all(np.isfinite(loss.data)):
                raise NumericalError("non-finite loss in gradient check")
            if loss.requires_grad:
                loss.backward()
            else:
                reset_graph()
            analytic = [t.grad if t.grad is not None else np.zeros_like(t.data) for t in tensors]

            worst = 0.0
            with no_grad():
                for tensor, grad in zip(tensors, analytic):
                    for i in range(tensor.size):
                        idx = np.unravel_index(i, tensor.shape)
                        original = tensor.data[idx]
                        tensor.data[idx] = original + eps
                        plus = f().item()
                        tensor.data[idx] = original - eps
                        minus = f().item()
                        tensor.data[idx] = original

                        a = float(grad[idx])
                        if not (math.isfinite(plus) and math.isfinite(minus) and math.isfinite(a)):
                            raise NumericalError("non-finite value in gradient check", parameter=tensor.name, index=i)
                        worst = max(worst, _relative_error(a, (plus - minus) / (2.0 * eps)))
            return worst
        finally:
            for t, (requires_grad, grad) in zip(tensors, saved):
                t.requires_grad = requires_grad
                t.grad = grad


def grad_check(f: Callable[[Tensor], Tensor], x: Tensor | np.ndarray, eps: float = 1e-4) -> float:
    """grad_check_params for a function of a single tensor"""
    source = x.data if isinstance(x, Tensor) else np.asarray(x)
    leaf = Tensor(source, requires_grad=True, name="x", dtype=np.float64)
    return grad_check_params(lambda: f(leaf), [leaf], eps)
