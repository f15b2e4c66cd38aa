"""Deterministic seed derivation for nested, parallel-safe experiment streams."""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """One splitmix64 finalizer step; maps any 64-bit integer to a well-mixed one."""
    x &= _MASK64
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9 & _MASK64
    x = (x ^ (x >> 27)) * 0x94D049BB133111EB & _MASK64
    return x ^ (x >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Child seed ``index`` of ``seed``: element ``index`` of the splitmix64 stream.

    Children of distinct (seed, index) pairs are decorrelated, so sweep cells can
    run in any order (or concurrently) without sharing generator state.
    """
    if index < 0:
        raise ValueError("index must be nonnegative")
    return splitmix64((seed + (index + 1) * _GOLDEN) & _MASK64)


def rng_from_seed(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed & _MASK64))
