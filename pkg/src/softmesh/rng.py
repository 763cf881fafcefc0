"""Hierarchical, collision-free RNG streams.

Every random draw in this package flows through a stream derived from an
integer root seed plus a tuple of integer key components, so results never
depend on wall clock, OS entropy, scheduling, or worker count.
"""
from __future__ import annotations

import numpy as np

__all__ = ["stream"]


def stream(seed: int, *key: int) -> np.random.Generator:
    """Return the generator for (seed, *key).

    The same (seed, key) pair always yields an identical stream; distinct
    keys yield statistically independent streams (numpy SeedSequence).
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, key)])))
