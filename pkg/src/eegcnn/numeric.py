"""Seeded random streams, weight initializers and a checked dot product.

Random numbers come from NumPy's PCG64 bit generator. A
:class:`SeededGenerator` built from ``seed`` is exactly
``numpy.random.Generator(PCG64(SeedSequence(seed)))``, and derived streams
use ``SeedSequence(seed, spawn_key=keys)``. Streams are therefore reproducible
for a given NumPy major version; nothing here promises equality with other
generators.

All arithmetic is float64.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError, InvalidRangeError, ShapeError

__all__ = [
    "SeededGenerator",
    "uniform_in",
    "he_uniform",
    "glorot_uniform",
    "he_limit",
    "glorot_limit",
    "dot",
]


class SeededGenerator:
    """Single-owner deterministic uniform source.

    Do not share one instance between threads; derive one per task with
    :meth:`derive` instead.
    """

    def __init__(self, seed: int, spawn_key: tuple[int, ...] = ()):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise InvalidArgumentError(f"seed must fit in 64 unsigned bits, got {seed}")
        self.seed = seed
        self.spawn_key = tuple(int(k) for k in spawn_key)
        self._rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(seed, spawn_key=self.spawn_key))
        )

    def __repr__(self):
        return f"SeededGenerator(seed={self.seed}, spawn_key={self.spawn_key})"

    def derive(self, *keys: int) -> "SeededGenerator":
        """Independent child stream identified by ``keys``; does not advance ``self``."""
        return SeededGenerator(self.seed, self.spawn_key + tuple(keys))

    def random(self, size=None):
        """Uniform draws in [0, 1)."""
        return self._rng.random(size)

    def integers(self, low, high=None, size=None):
        """Integers in [low, high)."""
        return self._rng.integers(low, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self._rng.permutation(n)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self._rng.normal(loc, scale, size)


def uniform_in(gen: SeededGenerator, lo: float, hi: float, n: int) -> np.ndarray:
    """``n`` draws from U[lo, hi)."""
    if not lo < hi:
        raise InvalidRangeError(f"empty interval [{lo}, {hi})")
    if n < 1:
        raise InvalidArgumentError(f"n must be >= 1, got {n}")
    out = lo + (hi - lo) * gen.random(n)
    # lo + (hi-lo)*u can round up to hi
    np.minimum(out, np.nextafter(hi, lo), out=out)
    return out


def he_limit(fan_in: int) -> float:
    if fan_in < 1:
        raise InvalidArgumentError(f"fan_in must be >= 1, got {fan_in}")
    return math.sqrt(6.0 / fan_in)


def glorot_limit(fan_in: int, fan_out: int) -> float:
    if fan_in < 1 or fan_out < 1:
        raise InvalidArgumentError(f"fans must be >= 1, got ({fan_in}, {fan_out})")
    return math.sqrt(6.0 / (fan_in + fan_out))


def he_uniform(gen: SeededGenerator, fan_in: int, n: int) -> np.ndarray:
    """He uniform: U[-L, L] with L = sqrt(6 / fan_in).

    For a conv kernel, ``fan_in`` is kernel_size * input_channels.
    """
    limit = he_limit(fan_in)
    return uniform_in(gen, -limit, limit, n)


def glorot_uniform(gen: SeededGenerator, fan_in: int, fan_out: int, n: int) -> np.ndarray:
    """Glorot uniform: U[-L, L] with L = sqrt(6 / (fan_in + fan_out))."""
    limit = glorot_limit(fan_in, fan_out)
    return uniform_in(gen, -limit, limit, n)


def dot(a: Sequence[float], b: Sequence[float]) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or a.shape != b.shape:
        raise ShapeError(f"dot needs two equal-length vectors, got {a.shape} and {b.shape}")
    return float(np.dot(a, b))
