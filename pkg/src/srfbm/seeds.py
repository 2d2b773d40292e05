"""Deterministic seed derivation for parallel Monte Carlo streams.

Child seeds are derived by mixing a master seed with one or more stream
indices through a SplitMix64-style 64-bit finalizer.  Streams derived from
distinct indices are statistically independent for practical purposes, and
the derivation is pure: (master_seed, indices) -> child_seed, with no
shared counter to coordinate.
"""

from __future__ import annotations

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


def _finalize(z: int) -> int:
    # SplitMix64 output scrambler (Steele, Lea & Flood 2014).
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def mix64(master_seed: int, *indices: int) -> int:
    """Derive a 64-bit child seed from a master seed and stream indices.

    Each index is folded in with the SplitMix64 golden-gamma increment and
    finalizer, so ``mix64(s, i, j)`` differs from ``mix64(s, j, i)`` and
    from ``mix64(s, i)`` for any i, j.
    """
    z = master_seed & _MASK64
    for idx in indices:
        z = _finalize((z + (int(idx) + 1) * _GOLDEN) & _MASK64)
    return z


def rng_for(master_seed: int, *indices: int) -> np.random.Generator:
    """A PCG64 generator seeded from the derived child seed."""
    return np.random.Generator(np.random.PCG64(mix64(master_seed, *indices)))
