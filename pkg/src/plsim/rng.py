"""Seeded random streams.

Every consumer (world generation, ranger noise, camera noise, fault sampling)
draws from its own PCG64 stream derived from the master seed and a stream
name, so adding draws in one subsystem never perturbs another.
"""

from __future__ import annotations

import zlib

import numpy as np

MASK64 = (1 << 64) - 1


def stream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for ``name`` under master ``seed``."""
    if not 0 <= seed <= MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    key = zlib.crc32(name.encode("utf-8"))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(key,))))


def child_seeds(seed: int, n: int, name: str = "runs") -> list[int]:
    """``n`` derived 64-bit seeds, e.g. one per Monte Carlo run."""
    ss = np.random.SeedSequence(seed, spawn_key=(zlib.crc32(name.encode("utf-8")),))
    return [int(s.generate_state(1, dtype=np.uint64)[0]) for s in ss.spawn(n)]
