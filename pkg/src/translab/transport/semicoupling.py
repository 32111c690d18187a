"""Optimal semicouplings between truncated Lebesgue measure and unit atoms on the line."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ..samplers.base import PointConfiguration
from .costs import CostSpec, as_cost
from .solver import TransportError, solve_units

DEFAULT_DELTA = 1.0 / 64
MASS_TOL = 1e-9


def default_padding(n: float) -> float:
    return 4.0 * math.sqrt(n) + 8.0


def units_per_atom(delta: float) -> int:
    k = 1.0 / delta
    K = int(round(k))
    if K < 1 or abs(k - K) > 1e-9:
        raise ValueError(f"1/delta must be a positive integer, got delta={delta}")
    return K


@dataclass(frozen=True)
class DiscretizedSupply:
    """Cells of width ``delta`` partitioning ``[-L, n + L]``, each of capacity ``delta``."""

    n: float
    delta: float
    L: float

    @classmethod
    def build(cls, n, delta, L):
        K = units_per_atom(delta)
        if abs(n * K - round(n * K)) > 1e-9:
            raise ValueError(f"window length {n} is not a multiple of delta={delta}")
        L = math.ceil(L * K - 1e-9) / K
        return cls(float(n), 1.0 / K, float(L))

    @property
    def count(self) -> int:
        return int(round((self.n + 2 * self.L) / self.delta))

    @property
    def centers(self) -> np.ndarray:
        return -self.L + self.delta * (np.arange(self.count) + 0.5)

    def cell_of(self, x) -> np.ndarray:
        return np.floor((np.asarray(x, dtype=float) + self.L) / self.delta).astype(np.int64)


@dataclass
class SemicouplingPlan:
    """Discrete optimal semicoupling.

    ``cell_atom[i]`` is the atom served by cell ``i`` (``-1`` if the cell is
    not used); every used cell sends its whole capacity ``delta``.
    """

    supply: DiscretizedSupply
    atoms: np.ndarray
    cell_atom: np.ndarray
    total_cost: float
    p: float
    l: float
    r: float
    info: dict = field(default_factory=dict)
    duals: np.ndarray | None = None

    @property
    def n(self) -> float:
        return self.supply.n

    @property
    def delta(self) -> float:
        return self.supply.delta

    @property
    def L(self) -> float:
        return self.supply.L

    def assignments(self):
        """``(cell, atom, mass)`` triples of the plan."""
        used = np.flatnonzero(self.cell_atom >= 0)
        return [(int(i), int(self.cell_atom[i]), self.delta) for i in used]

    def atom_mass(self) -> np.ndarray:
        return np.bincount(self.cell_atom[self.cell_atom >= 0], minlength=len(self.atoms)) * self.delta

    def map(self, x) -> np.ndarray:
        """Target atom position ``T(x)``; NaN where the containing cell is unused."""
        idx = self.supply.cell_of(x)
        out = np.full(np.shape(idx), np.nan)
        ok = (idx >= 0) & (idx < len(self.cell_atom))
        tgt = np.where(ok, self.cell_atom[np.clip(idx, 0, len(self.cell_atom) - 1)], -1)
        has = tgt >= 0
        out[has] = self.atoms[tgt[has]]
        return out

    def check(self):
        mass = self.atom_mass()
        if len(mass) and np.max(np.abs(mass - 1.0)) > MASS_TOL:
            raise TransportError("atom masses differ from 1")
        return True

    def to_dict(self, include_assignments=True, diagnostics=None) -> dict:
        d = {
            "cost": self.total_cost,
            "l": self.l,
            "r": self.r,
            "params": {
                "p": self.p,
                "delta": self.delta,
                "L": self.L,
                "n": self.n,
                "atoms": len(self.atoms),
                **{k: v for k, v in self.info.items() if isinstance(v, (int, float, str, bool))},
            },
        }
        if diagnostics is not None:
            d["a"] = diagnostics.a
            d["b"] = diagnostics.b
        if include_assignments:
            d["assignments"] = [{"cell": c, "atom": a, "mass": m} for c, a, m in self.assignments()]
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(**kw), indent=1)


def _points_and_window(points, n):
    if isinstance(points, PointConfiguration):
        if points.window.is_torus:
            raise ValueError("semicouplings are defined on the interval topology")
        return np.sort(points.points), float(points.window.length if n is None else n)
    if n is None:
        raise ValueError("window length n is required for raw point arrays")
    return np.sort(np.asarray(points, dtype=float)), float(n)


def solve_semicoupling(points, cost, delta=DEFAULT_DELTA, L=None, n=None, certify=True) -> SemicouplingPlan:
    """Exact optimum of the discretized semicoupling problem.

    Supply cells of width ``delta`` cover ``[-L, n + L]`` with capacity
    ``delta`` each (unused supply is discarded); every atom demands unit mass;
    a cell sending to atom ``y`` pays the exact cell average of ``|x - y|**p``.
    With ``certify`` the optimum carries a verified dual certificate; without
    it only moves between atoms up to eight ranks apart are checked.
    """
    cost = as_cost(cost)
    atoms, n = _points_and_window(points, n)
    if len(atoms) < 1:
        raise ValueError("semicoupling needs at least one atom")
    if L is None:
        L = default_padding(n)
    supply = DiscretizedSupply.build(n, delta, L)
    K = units_per_atom(supply.delta)
    if supply.count < K * len(atoms):
        raise TransportError(f"insufficient supply: {supply.count} cells for {len(atoms)} atoms at delta={delta}")
    sol = solve_units(supply.centers, 0.5 * supply.delta, atoms, np.full(len(atoms), K), cost.p,
                      unit_mass=supply.delta, certify=certify)
    used = np.flatnonzero(sol.sigma >= 0)
    lo, hi = used[0], used[-1]
    plan = SemicouplingPlan(
        supply=supply,
        atoms=atoms,
        cell_atom=sol.sigma,
        total_cost=sol.cost,
        p=cost.p,
        l=float(-supply.L + lo * supply.delta),
        r=float(-supply.L + (hi + 1) * supply.delta),
        info={"cycles": sol.cycles, "certified": sol.certified, "max_violation": sol.max_violation},
        duals=sol.v,
    )
    return plan


def _extension_is_inert(plan: SemicouplingPlan) -> bool:
    # with the outermost cell on each side unused, every new cell is farther
    # from each atom than an unused cell whose cost already bounds the dual
    return plan.cell_atom[0] < 0 and plan.cell_atom[-1] < 0


def adaptive_padding(points, cost, delta=DEFAULT_DELTA, L0=None, n=None, rtol=1e-6, max_doublings=12,
                     certify=True) -> SemicouplingPlan:
    """Double the padding until the optimal cost stops decreasing (relative ``rtol``).

    When both outermost cells are unused a further doubling cannot change the
    optimum (the current duals stay feasible for the new cells), so the loop
    stops without re-solving; ``info['padding_history']`` records each step.
    """
    atoms, n = _points_and_window(points, n)
    L = default_padding(n) if L0 is None else float(L0)
    if L <= 0:
        raise ValueError("initial padding must be positive")
    history = []
    plan = None
    for step in range(max_doublings + 1):
        try:
            cur = solve_semicoupling(atoms, cost, delta, L, n=n, certify=certify)
        except TransportError:
            if step == max_doublings:
                raise
            history.append((L, math.inf))
            L *= 2
            continue
        history.append((cur.L, cur.total_cost))
        if plan is not None and plan.total_cost - cur.total_cost <= rtol * plan.total_cost:
            plan = cur
            break
        plan = cur
        if _extension_is_inert(plan):
            history.append((2 * plan.L, plan.total_cost))
            plan.info["extension_inert"] = True
            break
        if step == max_doublings:
            raise TransportError(f"padding did not converge after {max_doublings} doublings")
        L = 2 * plan.L
    plan.info["padding_history"] = history
    plan.info["doublings"] = len(history) - 1
    return plan
