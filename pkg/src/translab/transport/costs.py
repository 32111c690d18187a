"""Concave power costs ``|x - y|**p`` and their exact integrals over intervals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import avg_power


@dataclass(frozen=True)
class CostSpec:
    p: float

    def __post_init__(self):
        if not (0.0 < self.p <= 1.0):
            raise ValueError(f"cost exponent p must lie in (0, 1], got {self.p}")

    @property
    def concave(self) -> bool:
        return self.p < 1.0


def as_cost(cost) -> CostSpec:
    return cost if isinstance(cost, CostSpec) else CostSpec(float(cost))


def segment_cost(a: float, b: float, y: float, p: float) -> float:
    """Exact ``int_a^b |x - y|**p dx``."""
    if b < a:
        raise ValueError("segment_cost needs a <= b")
    if b == a:
        return 0.0
    hw = 0.5 * (b - a)
    return float((b - a) * avg_power(abs(0.5 * (a + b) - y), hw, float(p)))


def single_atom_cost(p: float) -> float:
    """Cost of serving one unit atom from the centred unit interval: ``2**-p / (p + 1)``."""
    return 2.0 ** (-p) / (p + 1.0)


def point_cost(x, y, p):
    return np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)) ** p
