"""Counter-based seed derivation.

Every random draw in an experiment is seeded by ``derive_seed(master, *keys)``
where the keys name the draw (realisation number, subsample size, fold count,
...). The mixer is splitmix64, so seeds are reproducible entry by entry and
independent of evaluation order.
"""

from __future__ import annotations

import zlib

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """One splitmix64 step: advance the state by the golden gamma and mix."""
    z = (x + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def _key_to_int(key: int | str) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    return int(key) & _MASK


def derive_seed(master: int, *keys: int | str) -> int:
    """Derive a 64-bit seed from a master seed and a path of keys."""
    state = splitmix64(int(master) & _MASK)
    for key in keys:
        state = splitmix64(state ^ _key_to_int(key))
    return state


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))
