"""Deterministic random streams.

Every random draw in the library is a pure function of a 64-bit stream
key and an explicit index, backed by counter-based Philox blocks.
There is no hidden generator state: a Stream never advances, callers
derive child streams for independent purposes instead.  Two results of
the same computation therefore agree bit for bit, across processes,
and across the native/python kernel backends.

Keys are derived by folding labels (ints or short strings) into a
splitmix64 chain, so ("attack", 3, "init") style paths give well
separated streams without any bookkeeping.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend

_M64 = (1 << 64) - 1
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def _splitmix64(state: int) -> int:
    state = (state + 0x9E3779B97F4A7C15) & _M64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


def _fnv1a(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _M64
    return h


def derive_key(key: int, *parts: int | str) -> int:
    """Fold labels into a key; order sensitive, collision resistant
    enough for stream separation."""
    k = key & _M64
    for part in parts:
        if isinstance(part, bool):
            raise TypeError("bool is not a valid stream label")
        if isinstance(part, int):
            token = part & _M64
        elif isinstance(part, str):
            token = _fnv1a(part.encode("utf-8"))
        else:
            raise TypeError(f"stream labels must be int or str, got {type(part)!r}")
        # mix the key before folding so (key, part) and (part, key) differ
        k = _splitmix64(_splitmix64(k) ^ token)
    return k


@dataclass(frozen=True)
class Stream:
    """Immutable handle on a random stream.

    All draws are indexed, so repeating a call replays the same values.
    Use child() to get independent streams for sub-tasks.
    """

    key: int

    @classmethod
    def from_seed(cls, seed: int, *parts: int | str) -> "Stream":
        return cls(derive_key(_splitmix64(seed & _M64), *parts))

    def child(self, *parts: int | str) -> "Stream":
        if not parts:
            raise ValueError("child() requires at least one label")
        return Stream(derive_key(self.key, *parts))

    def uniforms(self, count: int, start: int = 0) -> np.ndarray:
        return backend.uniforms(self.key, start, count)

    def normals(self, n_samples: int, dim: int, start_sample: int = 0) -> np.ndarray:
        return backend.normals(self.key, start_sample, n_samples, dim)

    def normal_vector(self, dim: int, index: int = 0) -> np.ndarray:
        return backend.normals(self.key, index, 1, dim)[0]

    def integers(self, bound: int, count: int, start: int = 0) -> np.ndarray:
        """Integers in [0, bound); tiny floor bias, fine for shuffling."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        u = self.uniforms(count, start)
        vals = np.minimum((u * bound).astype(np.int64), bound - 1)
        return vals

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates permutation of range(n) driven by this stream."""
        out = np.arange(n, dtype=np.int64)
        if n < 2:
            return out
        u = self.uniforms(n - 1)
        for i in range(n - 1, 0, -1):
            j = min(int(u[n - 1 - i] * (i + 1)), i)
            out[i], out[j] = out[j], out[i]
        return out
