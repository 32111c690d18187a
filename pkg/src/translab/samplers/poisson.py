"""Homogeneous Poisson processes of unit intensity."""

from __future__ import annotations

import numpy as np
from scipy import stats


def sample_count(mean: float, rng: np.random.Generator, min_count: int = 0) -> int:
    """Poisson(mean) count, optionally conditioned on ``count >= min_count``."""
    if min_count <= 0:
        return int(rng.poisson(mean))
    tail = stats.poisson.sf(min_count - 1, mean)
    if tail <= 0:
        raise ValueError(f"P(count >= {min_count}) underflows at mean {mean}")
    # inverse survival function of the truncated law
    u = (1.0 - rng.random()) * tail
    k = int(stats.poisson.isf(u, mean))
    return max(k, min_count)


def sample_poisson_points(length: float, rng: np.random.Generator, min_count: int = 0) -> np.ndarray:
    if length <= 0:
        return np.empty(0)
    k = sample_count(length, rng, min_count)
    return np.sort(rng.uniform(0.0, length, k))


def sample_uniform_points(count: int, length: float, rng: np.random.Generator) -> np.ndarray:
    """Exactly ``count`` i.i.d. uniform points (Poisson conditioned on its count)."""
    return np.sort(rng.uniform(0.0, length, int(count)))
