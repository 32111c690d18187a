"""Randomly shifted lattices with i.i.d. Gaussian perturbations."""

from __future__ import annotations

import math

import numpy as np


def sample_lattice_points(length: float, sigma: float, rng: np.random.Generator, torus: bool = False) -> np.ndarray:
    """Points ``k + 1/2 + U + sigma * xi_k`` observed in ``[0, length)``.

    On the torus ``length`` must be an integer and exactly ``length`` sites
    are wrapped modulo ``length``.
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if length <= 0:
        return np.empty(0)
    shift = rng.random()
    if torus:
        N = int(round(length))
        if abs(N - length) > 1e-9:
            raise ValueError("torus lattice needs an integer circumference")
        k = np.arange(N)
        x = np.mod(k + 0.5 + shift + sigma * rng.standard_normal(N), length)
        return np.sort(x)
    pad = math.ceil(4 * sigma)
    k = np.arange(-pad - 1, math.ceil(length) + pad)
    x = k + 0.5 + shift + sigma * rng.standard_normal(len(k))
    x = x[(x >= 0) & (x < length)]
    return np.sort(x)
