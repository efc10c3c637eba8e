"""Log-space binomials and composition enumeration."""
from __future__ import annotations

import math
from functools import lru_cache
from typing import Iterator

import numpy as np
from scipy.special import gammaln

__all__ = [
    "log_binom",
    "log_factorials",
    "composition_count",
    "compositions",
    "iter_compositions",
    "xlogy",
]


def log_binom(n: int, k: int) -> float:
    if k < 0 or k > n:
        return -math.inf
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


@lru_cache(maxsize=64)
def log_factorials(n: int) -> np.ndarray:
    """``log(k!)`` for ``k = 0..n``."""
    return gammaln(np.arange(n + 1, dtype=float) + 1.0)


def xlogy(k: float, x: float) -> float:
    """``k * log(x)`` with ``0 * log(0) = 0``."""
    if k == 0:
        return 0.0
    if x == 0.0:
        return -math.inf
    return k * math.log(x)


def composition_count(n: int, parts: int) -> int:
    """Number of ways to write ``n`` as an ordered sum of ``parts`` non-negative integers."""
    if parts <= 0:
        return 1 if n == 0 else 0
    return math.comb(n + parts - 1, parts - 1)


@lru_cache(maxsize=256)
def _compositions_cached(n: int, parts: int) -> np.ndarray:
    if parts == 1:
        return np.array([[n]], dtype=np.int32)
    blocks = []
    for first in range(n, -1, -1):
        rest = _compositions_cached(n - first, parts - 1)
        head = np.full((rest.shape[0], 1), first, dtype=np.int32)
        blocks.append(np.hstack([head, rest]))
    return np.vstack(blocks)


def compositions(n: int, parts: int) -> np.ndarray:
    """All compositions of ``n`` into ``parts`` parts, lexicographically
    descending in the leading count. Shape ``(count, parts)``."""
    if parts <= 0:
        return np.zeros((1 if n == 0 else 0, 0), dtype=np.int32)
    if composition_count(n, parts) > 5_000_000:
        return np.vstack(list(iter_compositions(n, parts)))
    out = _compositions_cached(n, parts)
    out.setflags(write=False)
    return out


def iter_compositions(n: int, parts: int, chunk: int = 2_000_000) -> Iterator[np.ndarray]:
    """Yield the compositions of ``n`` in blocks, split on leading counts so
    no block exceeds ``chunk`` rows unless a single leading value does."""
    if parts <= 1:
        yield compositions(n, parts)
        return
    for first in range(n, -1, -1):
        rem = n - first
        if composition_count(rem, parts - 1) <= chunk:
            rest = _compositions_cached(rem, parts - 1)
            head = np.full((rest.shape[0], 1), first, dtype=np.int32)
            yield np.hstack([head, rest])
        else:
            for rest in iter_compositions(rem, parts - 1, chunk):
                head = np.full((rest.shape[0], 1), first, dtype=np.int32)
                yield np.hstack([head, rest])
