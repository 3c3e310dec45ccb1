"""Deterministic random streams and the unit-sphere latent prior.

`Rng` is xorshift64* (shifts 12/25/27, multiplier 0x2545F4914F6CDD1D) whose
state is seeded through one round of splitmix64, so seed 0 is valid and
every seed gives the same stream on every platform. Uniform draws take the
top 53 bits; normals use Box-Muller and discard the spare value of an odd
request.
"""
from __future__ import annotations

import math
import zlib

import numpy as np

from src.utils.errors import ContractError

MASK64 = (1 << 64) - 1
_MULTIPLIER = 0x2545F4914F6CDD1D
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(value: int) -> int:
    z = (value + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class Rng:
    """xorshift64* stream owned by exactly one consumer"""

    def __init__(self, seed: int):
        self.seed = int(seed) & MASK64
        self.state = splitmix64(self.seed) or _GOLDEN

    @classmethod
    def from_state(cls, seed: int, state: int) -> "Rng":
        rng = cls(seed)
        if state == 0:
            raise ContractError("xorshift state must be non-zero")
        rng.state = state & MASK64
        return rng

    def derive(self, tag: str) -> "Rng":
        """Independent stream keyed by the seed and a tag; does not advance self"""
        return Rng(splitmix64(self.seed ^ zlib.crc32(tag.encode("utf-8"))))

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * _MULTIPLIER) & MASK64

    def uniform(self) -> float:
        """Uniform in [0, 1)"""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform_array(self, shape: int | tuple[int, ...], low: float = 0.0, high: float = 1.0) -> np.ndarray:
        count = int(np.prod(shape))
        values = np.fromiter((self.uniform() for _ in range(count)), dtype=np.float64, count=count)
        return (low + (high - low) * values).reshape(shape)

    def integer(self, high: int) -> int:
        """Uniform integer in [0, high)"""
        if high < 1:
            raise ContractError(f"integer bound must be >= 1, got {high}")
        return min(int(self.uniform() * high), high - 1)

    def normal_array(self, shape: int | tuple[int, ...]) -> np.ndarray:
        count = int(np.prod(shape))
        values = np.empty(count, dtype=np.float64)
        for i in range(0, count, 2):
            u1 = 1.0 - self.uniform()
            u2 = self.uniform()
            r = math.sqrt(-2.0 * math.log(u1))
            values[i] = r * math.cos(2.0 * math.pi * u2)
            if i + 1 < count:
                values[i + 1] = r * math.sin(2.0 * math.pi * u2)
        return values.reshape(shape)

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates shuffle of range(n)"""
        order = np.arange(n)
        for i in range(n - 1, 0, -1):
            j = self.integer(i + 1)
            order[i], order[j] = order[j], order[i]
        return order


def sample_unit_sphere(n: int, rng: Rng) -> np.ndarray:
    """One draw from the uniform distribution on the unit sphere in R^n"""
    if n < 1:
        raise ContractError(f"latent dimension must be >= 1, got {n}")
    while True:
        z = rng.normal_array(n)
        norm = float(np.sqrt(np.sum(z * z)))
        if norm > 0.0:
            return z / norm


def sample_unit_sphere_batch(count: int, n: int, rng: Rng) -> np.ndarray:
    """`count` independent draws stacked as rows"""
    if count < 0:
        raise ContractError(f"count must be non-negative, got {count}")
    out = np.empty((count, n), dtype=np.float64)
    for i in range(count):
        out[i] = sample_unit_sphere(n, rng)
    return out
