"""Adam and inverse-time learning-rate decay"""
from __future__ import annotations

import math
from collections import OrderedDict
from typing import Mapping, Optional, Union

import numpy as np

from src.core.tensor import Tensor
from src.utils.errors import ContractError, DimensionError, NumericalError


class AdamState:
    """Moment accumulators for one parameter group, keyed by parameter name"""

    def __init__(self, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: OrderedDict[str, np.ndarray] = OrderedDict()
        self.v: OrderedDict[str, np.ndarray] = OrderedDict()

    def ensure(self, params: Mapping[str, Tensor]) -> None:
        """Create zero accumulators for parameters seen for the first time"""
        for name, p in params.items():
            if name not in self.m:
                self.m[name] = np.zeros_like(p.data)
                self.v[name] = np.zeros_like(p.data)

    def __repr__(self) -> str:
        return f"AdamState(t={self.t}, params={len(self.m)})"


def adam_update(
    params: Mapping[str, Tensor],
    grads: Mapping[str, Optional[np.ndarray]],
    state: AdamState,
    lr_t: Union[float, Mapping[str, float]],
) -> None:
    """One Adam step over `params`; a missing gradient counts as zero.

    Every gradient is validated before any parameter or moment changes.
    `lr_t` is a single rate or a rate per parameter name.
    """
    rates = {name: (lr_t[name] if isinstance(lr_t, Mapping) else lr_t) for name in params}
    for name, rate in rates.items():
        if not rate > 0:
            raise ContractError(f"learning rate must be positive, got {rate} for '{name}'")

    resolved: dict[str, np.ndarray] = {}
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p.data)
        elif g.shape != p.data.shape:
            raise DimensionError(f"gradient for '{name}' has the wrong shape", g.shape, p.data.shape)
        if not np.all(np.isfinite(g)):
            raise NumericalError("non-finite gradient", parameter=name)
        resolved[name] = g

    state.ensure(params)
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1**state.t
    correction2 = 1.0 - b2**state.t
    for name, p in params.items():
        g = resolved[name]
        m = state.m[name]
        v = state.v[name]
        m[...] = b1 * m + (1.0 - b1) * g
        v[...] = b2 * v + (1.0 - b2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        p.data -= (rates[name] * m_hat / (np.sqrt(v_hat) + state.eps)).astype(p.data.dtype, copy=False)


def decayed_lr(lr0: float, decay: float, step: int) -> float:
    """lr0 / (1 + decay * step)"""
    if step < 0:
        raise ContractError(f"step must be non-negative, got {step}")
    if decay < 0 or not math.isfinite(decay):
        raise ContractError(f"decay must be a non-negative real, got {decay}")
    return lr0 / (1.0 + decay * step)
