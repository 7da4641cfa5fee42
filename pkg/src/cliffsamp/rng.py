"""Reproducible random streams.

Every random draw comes from a stream keyed by ``(master seed, purpose,
block)``. Work is split into fixed-size blocks of configurations, so the
numbers a block sees never depend on how many threads run or in which
order blocks finish.
"""

from __future__ import annotations

import zlib

import numpy as np

BLOCK = 512


def _tag(purpose: str) -> int:
    return zlib.crc32(purpose.encode("utf-8"))


def check_seed(seed) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or not 0 <= seed < 2**64:
        raise ValueError(f"seed must be an integer in [0, 2^64), got {seed!r}")
    return int(seed)


def stream(seed: int, purpose: str, block: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=(_tag(purpose), int(block)))
    return np.random.Generator(np.random.PCG64(ss))


def blocks(n: int, size: int = BLOCK) -> list[tuple[int, int, int]]:
    """``(block, start, stop)`` triples covering ``range(n)``."""
    return [(b, s, min(s + size, n)) for b, s in enumerate(range(0, n, size))]
