"""Random streams.

A run has a single root seed. Each learning-curve stage ``n`` gets its own
Philox stream keyed by ``(n,)`` and each bootstrap replicate a child keyed by
``(n, b)``, so the draws of a replicate never depend on worker count, on the
order replicates are scheduled in, or on which other stages were run.
"""
from __future__ import annotations

import numpy as np


def stage_generator(seed: int, n: int, purpose: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(n), int(purpose)))
    return np.random.Generator(np.random.Philox(ss))


def resample_indices(rng, n: int) -> np.ndarray:
    return rng.integers(0, n, size=n)


class DegenerateGenerator:
    """Stand-in generator whose every draw is the identity.

    ``integers(0, n, size=n)`` yields ``0..n-1`` so every bootstrap sample is
    the original sample, and ``permutation`` leaves its input in place. Used
    to check the zero-optimism identities of the bootstrap engine.
    """

    def spawn(self, k: int):
        return [DegenerateGenerator() for _ in range(k)]

    def integers(self, low, high=None, size=None):
        if high is None:
            low, high = 0, low
        if size is None:
            return int(low)
        return low + np.arange(int(np.prod(size))).reshape(size) % (high - low)

    def permutation(self, x):
        if isinstance(x, (int, np.integer)):
            return np.arange(x)
        return np.array(x, copy=True)
