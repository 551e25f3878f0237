"""Deterministic random-stream management.

Every stochastic routine in the toolkit draws from a substream addressed by
a root seed plus an integer path (e.g. ``(iteration, row)`` or
``(replicate, stage)``).  Substreams are independent of execution order, so
results are identical whether work runs sequentially or in parallel.
"""

from __future__ import annotations

import numpy as np


def substream(seed: int, *path: int) -> np.random.Generator:
    """Return the generator for the substream addressed by ``path`` under ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(path)))


def child_seed(seed: int, *path: int) -> int:
    """Derive a new root seed for a nested component (e.g. one IRO chain per replicate)."""
    state = np.random.SeedSequence(seed, spawn_key=tuple(path)).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 32 | int(state[1])


def as_generator(rng: int | np.random.Generator | np.random.SeedSequence | None) -> np.random.Generator:
    """Normalize a seed, SeedSequence, or Generator into a Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
