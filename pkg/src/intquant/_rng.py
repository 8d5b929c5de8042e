"""Counter-based random streams.

Every stochastic quantity is drawn from a Philox4x64 generator keyed by
``(master_seed, experiment_id)`` whose counter starts at replicate index
``r`` in its most significant word.  Replicates therefore have disjoint,
reproducible streams regardless of execution order or thread count.
"""
from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1

# experiment identifiers
BIAS = 1
NORMALITY = 2
MEDIAN_GAP = 3
VERVAAT = 4
BOOTSTRAP = 5
AR1 = 6
FUZZ = 7
PILOT = 8


def experiment_id(tag: int, sub: int = 0) -> int:
    return ((tag & 0xFFFFFFFF) << 32) | (sub & 0xFFFFFFFF)


def stream(master_seed: int, experiment: int, replicate: int = 0) -> np.random.Generator:
    key = np.array([master_seed & _MASK, experiment & _MASK], dtype=np.uint64)
    counter = np.array([0, 0, 0, replicate & _MASK], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))
