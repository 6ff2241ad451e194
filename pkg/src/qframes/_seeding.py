"""Seed handling shared by the randomized routines.

Every randomized entry point accepts ``None``, an ``int``, a sequence of
ints, a :class:`numpy.random.SeedSequence` or a ready
:class:`numpy.random.Generator`.  Per-item streams (trials, workers,
rotations) are derived as ``SeedSequence([base_seed, *index])`` so a result
never depends on execution order.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed=None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def child_rng(base_seed: int, *index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(base_seed), *map(int, index)]))
