"""Counter-based random streams.

Each stream is a Philox generator keyed by ``(seed, tag)`` whose counter is
offset by a block index, so block ``k`` of a stream is the same no matter
which worker draws it or in what order.
"""
from __future__ import annotations

import os
import zlib

import numpy as np

DEFAULT_SEED = 20240917


def default_seed() -> int:
    return int(os.environ.get("WIDTHLAB_SEED", DEFAULT_SEED))


def _tag(tag) -> int:
    if isinstance(tag, (int, np.integer)):
        return int(tag) & 0xFFFFFFFFFFFFFFFF
    return zlib.crc32(str(tag).encode())


def stream(seed: int, tag=0, block: int = 0) -> np.random.Generator:
    key = np.array([int(seed) & 0xFFFFFFFFFFFFFFFF, _tag(tag)], dtype=np.uint64)
    counter = np.array([0, 0, 0, int(block)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def unit_vectors(seed: int, n: int, d: int, tag="directions") -> np.ndarray:
    """``n`` uniform directions on S^{d-1}; direction ``i`` depends only on
    ``(seed, tag, i)``."""
    out = np.empty((n, d))
    for i in range(n):
        v = stream(seed, tag, i).standard_normal(d)
        out[i] = v / np.linalg.norm(v)
    return out


def uniform_block(seed: int, tag, block: int, size: int, lo, hi) -> np.ndarray:
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    u = stream(seed, tag, block).random((size, lo.shape[0]))
    return lo + u * (hi - lo)
