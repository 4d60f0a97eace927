"""Deterministic stream derivation for replica ensembles.

Replica i of a run with base seed s draws from an independent PCG64 stream
seeded with mix64(s, i).  The mixer is the splitmix64 finalizer (Steele,
Lea & Flood 2014), an avalanche permutation of the 64-bit counter
s*GOLDEN + i: flipping any input bit flips each output bit with
probability ~1/2, so consecutive (s, i) pairs land on unrelated seeds.
"""

from __future__ import annotations

import numpy as np

_MASK = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(base_seed: int, index: int) -> int:
    """Avalanche-mix a base seed and a stream index into a 64-bit seed."""
    if base_seed < 0 or index < 0:
        raise ValueError("base_seed and index must be non-negative")
    z = (base_seed * _GOLDEN + index * 0xBF58476D1CE4E5B9) & _MASK
    z = (z + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def make_rng(base_seed: int, index: int = 0) -> np.random.Generator:
    """PCG64 generator for stream ``index`` of run ``base_seed``."""
    return np.random.Generator(np.random.PCG64(mix64(base_seed, index)))
