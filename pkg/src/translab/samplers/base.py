"""Shared types for the point-process samplers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TIE_STEP = 1e-12

INTERVAL = "interval"
TORUS = "torus"


@dataclass(frozen=True)
class WindowSpec:
    """Observation window ``[0, n)`` on the line or a circle of circumference ``n``.

    ``padding`` is the supply overhang used by the transport solvers on the
    interval topology; torus windows never carry padding.
    """

    length: float
    topology: str = INTERVAL
    padding: float = 0.0

    def __post_init__(self):
        if not (self.length >= 0 and math.isfinite(self.length)):
            raise ValueError(f"window length must be a finite non-negative real, got {self.length}")
        if self.topology not in (INTERVAL, TORUS):
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.padding < 0:
            raise ValueError("padding must be non-negative")
        if self.topology == TORUS and self.padding != 0:
            raise ValueError("torus windows have no padding")

    @property
    def is_torus(self) -> bool:
        return self.topology == TORUS


@dataclass
class PointConfiguration:
    points: np.ndarray
    window: WindowSpec
    seed_record: tuple[int, int] = (0, 0)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)

    def __len__(self) -> int:
        return len(self.points)

    def count(self, a: float, b: float) -> int:
        """Number of points in ``[a, b)``; arcs wrap on the torus."""
        pts = self.points
        if not self.window.is_torus:
            return int(np.searchsorted(pts, b, "left") - np.searchsorted(pts, a, "left"))
        n = self.window.length
        if b - a >= n:
            full, rest = divmod(b - a, n)
            return int(full) * len(pts) + self.count(a, a + rest)
        a0 = a % n
        b0 = a0 + (b - a)
        if b0 <= n:
            return int(np.searchsorted(pts, b0, "left") - np.searchsorted(pts, a0, "left"))
        return int(len(pts) - np.searchsorted(pts, a0, "left") + np.searchsorted(pts, b0 - n, "left"))


def make_rng(seed: int, replica: int = 0, *tags: int) -> np.random.Generator:
    """Counter-based stream for ``(seed, replica)``; independent of scheduling."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(replica), *map(int, tags)]))


def separate_ties(points: np.ndarray) -> np.ndarray:
    """Sort and push exact duplicates apart by ``i * TIE_STEP`` within each tie group."""
    x = np.sort(np.asarray(points, dtype=float))
    if len(x) < 2:
        return x
    dup = np.concatenate(([False], x[1:] == x[:-1]))
    if not dup.any():
        return x
    # rank inside each run of equal values
    run_start = np.maximum.accumulate(np.where(~dup, np.arange(len(x)), 0))
    rank = np.arange(len(x)) - run_start
    return x + rank * TIE_STEP


def validate_seed(seed) -> int:
    if seed is None:
        raise ValueError("seed required")
    s = int(seed)
    if s < 0 or s >= 2**64:
        raise ValueError("seed must fit in an unsigned 64-bit integer")
    return s
