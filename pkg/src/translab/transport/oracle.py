"""Dense LP reference solver (scipy HiGHS) for small transport instances."""

from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.optimize import linprog


def lp_transport(cost: np.ndarray, supply: np.ndarray, demand: np.ndarray, balanced: bool = False) -> float:
    """Minimum of ``sum C_ij x_ij`` with row sums ``<= supply`` (``==`` if balanced) and column sums ``== demand``."""
    cost = np.asarray(cost, dtype=float)
    M, N = cost.shape
    rows = sparse.kron(sparse.eye(M), np.ones((1, N)), format="csr")
    cols = sparse.kron(np.ones((1, M)), sparse.eye(N), format="csr")
    if balanced:
        A_eq = sparse.vstack([rows, cols]).tocsr()
        b_eq = np.concatenate([supply, demand])
        res = linprog(cost.ravel(), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    else:
        res = linprog(cost.ravel(), A_ub=rows, b_ub=supply, A_eq=cols, b_eq=demand, bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"LP oracle failed: {res.message}")
    return float(res.fun)
