"""Counter-based random streams.

Every stochastic routine draws from ``stream(seed, purpose, index, ...)``:
a Philox generator keyed by the master seed and a path of non-negative
integers. Two calls with the same arguments give bit-identical draws,
independent of call order or worker count.
"""

from __future__ import annotations

import os

import numpy as np

SEED_ENV = "LANDSCAPE_LAB_SEED"
DEFAULT_SEED = 0

# first path component, so unrelated draws under one seed never share a stream
WEIGHTS = 0
DATA = 1
TRIALS = 2
PERTURB = 3
BALL = 4
BOX = 5
INSTANCE = 6


def stream(seed: int, *path: int) -> np.random.Generator:
    if seed < 0 or any(p < 0 for p in path):
        raise ValueError("seed and stream path must be non-negative")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(path))
    return np.random.Generator(np.random.Philox(ss))


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    return int(raw) if raw else DEFAULT_SEED
