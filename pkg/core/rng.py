"""
rng.py

Seed derivation for reproducible experiments.

Every random stream in the lab comes from a numpy Generator backed by the
counter-based Philox bit generator. Streams are derived from a master seed
and a tuple of integer keys (grid point, sample index, chain index, ...)
through SeedSequence spawn keys, so task k of a run draws from the same
stream no matter which worker executes it.
"""
from __future__ import annotations

from typing import Union

import numpy as np

SeedLike = Union[int, np.random.Generator]

MASK64 = (1 << 64) - 1


def mix(master_seed: int, *keys: int) -> int:
    """A 64-bit seed derived from a master seed and integer keys."""
    ss = np.random.SeedSequence(int(master_seed) & MASK64, spawn_key=tuple(int(k) for k in keys))
    hi, lo = ss.generate_state(2, dtype=np.uint32)
    return (int(hi) << 32) | int(lo)


def make_rng(master_seed: int, *keys: int) -> np.random.Generator:
    """Generator for the stream identified by (master_seed, keys)."""
    ss = np.random.SeedSequence(int(master_seed) & MASK64, spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def as_rng(seed: SeedLike) -> np.random.Generator:
    """Accept either a ready Generator or an integer seed."""
    if isinstance(seed, np.random.Generator):
        return seed
    return make_rng(int(seed))


def child_seed(rng: np.random.Generator) -> int:
    """Draw a fresh 64-bit seed from an existing stream."""
    return int(rng.integers(0, 2**62))
