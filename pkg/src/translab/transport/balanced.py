"""Balanced couplings between discrete measures on the line."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .costs import as_cost
from .solver import solve_units

MASS_TOL = 1e-9


@dataclass
class DiscreteMeasure:
    """Weighted atoms, optionally smeared uniformly over ``[x - halfwidth, x + halfwidth]``."""

    positions: np.ndarray
    masses: np.ndarray
    halfwidth: float = 0.0

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float).ravel()
        self.masses = np.broadcast_to(np.asarray(self.masses, dtype=float), self.positions.shape).copy()
        if np.any(self.masses < 0):
            raise ValueError("masses must be non-negative")

    @property
    def total(self) -> float:
        return float(self.masses.sum())

    @classmethod
    def atoms(cls, points, mass=1.0):
        pts = np.asarray(points, dtype=float)
        return cls(pts, np.full(pts.shape, float(mass)))

    @classmethod
    def lebesgue(cls, a, b, delta, smeared=False):
        """Restriction of Lebesgue measure to ``[a, b)`` as cells of width ``delta``."""
        m = int(round((b - a) / delta))
        if m < 0 or abs(m * delta - (b - a)) > 1e-9:
            raise ValueError("interval length must be a non-negative multiple of delta")
        centers = a + delta * (np.arange(m) + 0.5)
        return cls(centers, np.full(m, delta), 0.5 * delta if smeared else 0.0)

    def __add__(self, other: "DiscreteMeasure") -> "DiscreteMeasure":
        if self.halfwidth != other.halfwidth:
            raise ValueError("cannot stack measures with different cell widths")
        return DiscreteMeasure(np.concatenate([self.positions, other.positions]),
                               np.concatenate([self.masses, other.masses]), self.halfwidth)


@dataclass
class BalancedResult:
    cost: float
    moved_mass: float
    common_mass: float
    certified: bool
    source: np.ndarray
    target: np.ndarray
    mass: np.ndarray

    def pairs(self):
        return list(zip(self.source.tolist(), self.target.tolist(), self.mass.tolist()))


def _to_units(masses, unit):
    q = masses / unit
    r = np.rint(q)
    if np.any(np.abs(q - r) > 1e-6):
        raise ValueError(f"masses are not integer multiples of the unit {unit}")
    return r.astype(np.int64)


def _grouped(positions, counts):
    order = np.argsort(positions, kind="mergesort")
    pos = positions[order]
    cnt = counts[order]
    uniq, start = np.unique(pos, return_index=True)
    tot = np.add.reduceat(cnt, start) if len(pos) else np.zeros(0, np.int64)
    return uniq, tot


def solve_balanced(mu_A: DiscreteMeasure, mu_B: DiscreteMeasure, cost, unit=None, certify=True) -> BalancedResult:
    """Optimal coupling cost between two discrete measures of equal mass.

    Masses are handled in integer multiples of ``unit`` (default: the smallest
    positive mass present).  Mass shared by both measures at the same location
    is left in place before solving, which is optimal for ``p <= 1``.
    """
    cost = as_cost(cost)
    if abs(mu_A.total - mu_B.total) > MASS_TOL * max(1.0, mu_A.total):
        raise ValueError(f"mass mismatch: {mu_A.total} vs {mu_B.total}")
    if mu_A.halfwidth > 0 and mu_B.halfwidth > 0:
        raise ValueError("at most one side may consist of smeared cells")
    if mu_B.halfwidth > 0:
        mu_A, mu_B = mu_B, mu_A
    pos_masses = np.concatenate([mu_A.masses, mu_B.masses])
    pos_masses = pos_masses[pos_masses > 0]
    if len(pos_masses) == 0:
        return BalancedResult(0.0, 0.0, 0.0, True, np.zeros(0), np.zeros(0), np.zeros(0))
    if unit is None:
        unit = float(pos_masses.min())
    a_pos, a_cnt = _grouped(mu_A.positions, _to_units(mu_A.masses, unit))
    b_pos, b_cnt = _grouped(mu_B.positions, _to_units(mu_B.masses, unit))
    common = 0
    if mu_A.halfwidth == 0:
        shared, ia, ib = np.intersect1d(a_pos, b_pos, assume_unique=True, return_indices=True)
        keep = np.minimum(a_cnt[ia], b_cnt[ib])
        a_cnt[ia] -= keep
        b_cnt[ib] -= keep
        common = int(keep.sum())
    a_pos, a_cnt = a_pos[a_cnt > 0], a_cnt[a_cnt > 0]
    b_pos, b_cnt = b_pos[b_cnt > 0], b_cnt[b_cnt > 0]
    moved = int(a_cnt.sum())
    if moved == 0:
        return BalancedResult(0.0, 0.0, common * unit, True, np.zeros(0), np.zeros(0), np.zeros(0))
    sp = np.repeat(a_pos, a_cnt)
    sol = solve_units(sp, mu_A.halfwidth, b_pos, b_cnt, cost.p, disposal=False, unit_mass=unit, certify=certify)
    # aggregate identical (source, target) unit moves
    key_src = sp
    key_tgt = b_pos[sol.sigma]
    pairs, inv = np.unique(np.stack([key_src, key_tgt]), axis=1, return_inverse=True)
    mass = np.bincount(inv.ravel(), minlength=pairs.shape[1]) * unit
    return BalancedResult(sol.cost, moved * unit, common * unit, sol.certified, pairs[0], pairs[1], mass)
