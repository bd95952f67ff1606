"""Latin hypercube draws on the unit box."""

from __future__ import annotations

import numpy as np


def latin_hypercube(n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """(n, dim) sample with one point in each of n equal strata per column.

    Each column independently permutes the strata and jitters uniformly
    inside them, so every 1-D margin is stratified.
    """
    if n < 1 or dim < 1:
        raise ValueError("need n >= 1 and dim >= 1")
    out = np.empty((n, dim))
    for j in range(dim):
        out[:, j] = (rng.permutation(n) + rng.uniform(size=n)) / n
    return out
