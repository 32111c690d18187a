"""Exact unit-item transport: level-decomposition warm start plus certified cycle canceling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K

DP_BAND = 256
EDGE_WIDTH = 8


class TransportError(RuntimeError):
    pass


@dataclass
class UnitSolution:
    """Assignment of supply units to atoms with its dual certificate.

    ``sigma[i]`` is the atom served by supply unit ``i`` (``-1`` if unused);
    ``cost`` already includes ``unit_mass``.  When ``certified`` the duals
    ``v, u`` were checked against every (unit, atom) pair and
    ``max_violation`` is the largest reduced-cost violation found; otherwise
    only moves between atoms a few ranks apart were searched and
    ``max_violation`` is NaN.
    """

    sigma: np.ndarray
    cost: float
    v: np.ndarray
    u: np.ndarray
    cycles: int
    max_violation: float
    certified: bool
    long_edges: int


def solve_units(sp, hw, ap, units, p, circumference=0.0, disposal=True, unit_mass=1.0,
                band=DP_BAND, edge_width=EDGE_WIDTH, brute_check=False, max_cycles=None, certify=True) -> UnitSolution:
    sp = np.ascontiguousarray(sp, dtype=float)
    ap = np.ascontiguousarray(ap, dtype=float)
    units = np.ascontiguousarray(units, dtype=np.int64)
    if np.any(np.diff(sp) < 0) or np.any(np.diff(ap) < 0):
        raise ValueError("supply and atom positions must be sorted")
    if np.any(units < 1):
        raise ValueError("every atom must demand at least one unit")
    demand = int(units.sum())
    M = len(sp)
    if M < demand or (not disposal and M != demand):
        raise TransportError(f"infeasible: {M} supply units for {demand} demanded units")
    if len(ap) == 0:
        return UnitSolution(np.full(M, -1), 0.0, np.zeros(0), np.zeros(M), 0, 0.0, True, 0)
    if not 0 < p <= 1:
        raise ValueError(f"cost exponent must lie in (0, 1], got {p}")
    C = float(circumference)
    band = int(band) if band and band > 0 else len(sp) + demand
    sigma, status = K.warm_start(sp, float(hw), ap, units, float(p), band)
    if status != 0:
        raise TransportError("level decomposition found an infeasible level; supply padding too small")
    scale = max(1.0, float(K.assignment_cost(sp, float(hw), ap, sigma, float(p), C)) / max(demand, 1))
    tol = 1e-12 * scale
    if max_cycles is None:
        max_cycles = 50 * M + 1000
    sigma, v, u, status, cycles, viol, n_extra = K.refine(
        sp, float(hw), ap, units, sigma, float(p), C, bool(disposal), int(edge_width),
        bool(brute_check), tol, int(max_cycles), 10 * len(ap) + 100 if certify else -1)
    if status == 2:
        raise TransportError(f"cycle canceling did not converge within {max_cycles} cycles")
    if status == 4:
        raise TransportError(f"optimality certificate failed (status {status}, violation {viol:.3g})")
    if status == 3:
        raise TransportError(f"dual check still violated ({viol:.3g}) after adding {n_extra} long moves")
    raw = float(K.assignment_cost(sp, float(hw), ap, sigma, float(p), C))
    return UnitSolution(
        sigma=sigma,
        cost=raw * unit_mass,
        v=v,
        u=u,
        cycles=int(cycles),
        max_violation=float(viol),
        certified=status == 0,
        long_edges=int(n_extra),
    )


def cost_matrix(sp, hw, ap, p, circumference=0.0) -> np.ndarray:
    """Dense per-unit cost table, for oracles and small instances."""
    out = np.empty((len(sp), len(ap)))
    for i, s in enumerate(sp):
        for j, y in enumerate(ap):
            out[i, j] = K.pair_cost(float(s), float(hw), float(y), float(p), float(circumference))
    return out
