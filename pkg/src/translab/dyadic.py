"""Recursive dyadic coupling of Lebesgue measure and a point configuration.

On ``[0, 2**K)`` every unit block ``[j, j + 1)`` holding ``Z`` atoms is
coupled to the left-aligned Lebesgue block ``[j, j + Z)``.  Two sibling
blocks of length ``2**k`` are merged by keeping both child couplings and adding
a repair coupling between ``1_[0, Z_{k+1})`` and
``1_[0, Z_k) + 1_[2**k, 2**k + Z'_k)`` (offsets relative to the parent block).
The cost of the merged coupling is the sum of the three parts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .samplers import WindowSpec, sample
from .transport import DiscreteMeasure, solve_balanced
from .transport.costs import as_cost

MASS_TOL = 1e-9
DEFAULT_DELTA = 1.0 / 64


def repair_closed_form(z_left: int, z_right: int, half: float, p: float) -> float:
    """Exact repair cost between the two Lebesgue configurations of a merge step.

    After cancelling common mass, an interval of length ``m`` is matched to an
    interval of the same length at gap ``g``; the nested (order-reversing)
    plan is optimal for concave costs and costs
    ``((g + 2m)**(p+1) - g**(p+1)) / (2 (p + 1))``.
    """
    total = z_left + z_right
    if z_left <= half:
        m = min(z_right, half - z_left)
        lo_a = z_left  # excess of the merged block
        lo_b = max(half, total)  # excess of the stacked children
        g = lo_b - (lo_a + m)
    else:
        m = min(z_right, z_left - half)
        g = (total - m) - (half + m)
    if m <= 0:
        return 0.0
    return ((g + 2 * m) ** (p + 1) - g ** (p + 1)) / (2 * (p + 1))


def _lebesgue_cells(a, b, delta):
    return DiscreteMeasure.lebesgue(a, b, delta)


def repair_cost(z_left: int, z_right: int, half: float, p: float, delta: float = DEFAULT_DELTA) -> float:
    """Repair cost computed with :func:`solve_balanced` on width-``delta`` cells."""
    if z_right == 0 or z_left == half:
        return 0.0
    merged = _lebesgue_cells(0.0, z_left + z_right, delta)
    stacked = _lebesgue_cells(0.0, z_left, delta) + _lebesgue_cells(half, half + z_right, delta)
    res = solve_balanced(merged, stacked, p, unit=delta, certify=True)
    if abs(res.moved_mass + res.common_mass - (z_left + z_right)) > MASS_TOL * max(1, z_left + z_right):
        raise RuntimeError("repair coupling lost mass")
    return res.cost


def block_cost(atoms: np.ndarray, start: float, p: float, delta: float = DEFAULT_DELTA) -> float:
    """Optimal coupling of the atoms in ``[start, start + 1)`` with ``1_[start, start + Z)``."""
    z = len(atoms)
    if z == 0:
        return 0.0
    leb = DiscreteMeasure.lebesgue(start, start + z, delta, smeared=True)
    res = solve_balanced(leb, DiscreteMeasure.atoms(atoms), p, unit=delta, certify=True)
    if abs(res.moved_mass + res.common_mass - z) > MASS_TOL * z:
        raise RuntimeError("level-0 coupling lost mass")
    return res.cost


@dataclass
class DyadicPath:
    """Construction on one path.

    ``counts[k]`` holds the counts of all ``2**(K-k)`` blocks of length
    ``2**k``; ``costs[k]`` their constructed coupling costs and ``repairs[k]``
    (``k >= 1``) the repair costs paid when forming them.
    """

    K: int
    p: float
    delta: float
    counts: list
    costs: list
    repairs: list

    @property
    def Z(self) -> np.ndarray:
        """``Z_k = mu([0, 2**k))`` for ``k = 0..K``."""
        return np.array([c[0] for c in self.counts])

    @property
    def Z_prime(self) -> np.ndarray:
        """``Z'_k = mu([2**k, 2**(k+1)))`` for ``k = 0..K-1``."""
        return np.array([self.counts[k][1] for k in range(self.K)])

    @property
    def cbar(self) -> np.ndarray:
        """Per-unit-length constructed cost of the first block at each level."""
        return np.array([self.costs[k][0] / 2**k for k in range(self.K + 1)])

    @property
    def cbar_mean(self) -> np.ndarray:
        """Per-unit-length constructed cost averaged over all blocks of each level."""
        return np.array([self.costs[k].mean() / 2**k for k in range(self.K + 1)])

    def check(self):
        for k in range(self.K):
            if not np.array_equal(self.counts[k + 1], self.counts[k][0::2] + self.counts[k][1::2]):
                raise RuntimeError(f"count additivity broken at level {k}")
            merged = self.costs[k][0::2] + self.costs[k][1::2] + self.repairs[k + 1]
            if np.max(np.abs(merged - self.costs[k + 1])) > MASS_TOL * max(1.0, merged.max()):
                raise RuntimeError(f"cost telescoping broken at level {k}")
        return True


def build_dyadic(points, K: int, p: float, delta: float = DEFAULT_DELTA, exact_repair: bool = False) -> DyadicPath:
    """Run the dyadic construction on points in ``[0, 2**K)``.

    With ``exact_repair`` the repair costs use :func:`repair_closed_form`
    instead of solving the discretized problem.
    """
    if K < 1:
        raise ValueError("dyadic depth K must be >= 1")
    p = as_cost(p).p
    if not p < 1:
        raise ValueError("the dyadic construction needs p in (0, 1)")
    pts = np.sort(np.asarray(getattr(points, "points", points), dtype=float))
    n = 2**K
    if len(pts) and (pts[0] < 0 or pts[-1] >= n):
        raise ValueError(f"points must lie in [0, {n})")
    edges = np.searchsorted(pts, np.arange(n + 1), "left")
    counts0 = np.diff(edges)
    costs0 = np.array([block_cost(pts[edges[j]:edges[j + 1]], float(j), p, delta) for j in range(n)])
    counts, costs, repairs = [counts0], [costs0], [np.zeros(n)]
    for k in range(K):
        half = 2**k
        zl, zr = counts[k][0::2], counts[k][1::2]
        if exact_repair:
            rep = np.array([repair_closed_form(int(a), int(b), half, p) for a, b in zip(zl, zr)])
        else:
            rep = np.array([repair_cost(int(a), int(b), half, p, delta) for a, b in zip(zl, zr)])
        counts.append(zl + zr)
        costs.append(costs[k][0::2] + costs[k][1::2] + rep)
        repairs.append(rep)
    path = DyadicPath(K, p, delta, counts, costs, repairs)
    path.check()
    return path


def bound_terms(var_z: np.ndarray, p: float) -> np.ndarray:
    """``2**-k Var(Z_k)**((1+p)/2) + Var(Z_k)**(1/2) 2**(k(p-1)) / 2`` for ``k = 0, 1, ...``."""
    v = np.asarray(var_z, dtype=float)
    if np.any(v < 0):
        raise ValueError("variances must be non-negative")
    k = np.arange(len(v))
    return 2.0 ** (-k) * v ** ((1 + p) / 2) + 0.5 * np.sqrt(v) * 2.0 ** (k * (p - 1))


@dataclass
class DyadicLedger:
    model: str
    K: int
    p: float
    delta: float
    R: int
    seed: int
    mean_cbar: np.ndarray
    se_cbar: np.ndarray
    mean_cbar_first: np.ndarray
    mean_increment: np.ndarray
    se_increment: np.ndarray
    var_Z: np.ndarray
    bound_term: np.ndarray
    mean_Z: np.ndarray
    mean_Z_prime: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def levels(self) -> np.ndarray:
        return np.arange(self.K + 1)

    def bound_holds(self, n_se: float = 3.0) -> np.ndarray:
        """Per level ``k < K``: ``E[cbar_{k+1} - cbar_k] <= bound_term_k + n_se * SE``."""
        return self.mean_increment <= self.bound_term[: self.K] + n_se * self.se_increment

    def flattening_ratio(self) -> float:
        """Last increment relative to ``cbar_0``."""
        return float(self.mean_increment[-1] / self.mean_cbar[0])

    def rows(self):
        """CSV rows ``level, mean_cbar, se_cbar, mean_increment, bound_term``; the last level has no increment."""
        out = []
        for k in range(self.K + 1):
            inc = self.mean_increment[k] if k < self.K else float("nan")
            out.append((k, self.mean_cbar[k], self.se_cbar[k], inc, self.bound_term[k]))
        return out


def run_dyadic(model, K: int, p: float, R: int, seed: int, delta: float = DEFAULT_DELTA,
               exact_repair: bool = False) -> DyadicLedger:
    """Monte Carlo ledger over ``R`` paths on ``[0, 2**K)``.

    ``cbar_k`` averages over all blocks of a level (same expectation as the
    first block by stationarity, lower noise); ``Var(Z_k)`` is the pooled
    sample variance of block counts from the same replicas.
    """
    if R < 2:
        raise ValueError("need at least two replicas")
    n = 2**K
    cb = np.empty((R, K + 1))
    cb_first = np.empty((R, K + 1))
    zs = [[] for _ in range(K + 1)]
    Z = np.empty((R, K + 1))
    Zp = np.empty((R, K))
    for r in range(R):
        cfg = sample(model, WindowSpec(float(n)), seed, r)
        path = build_dyadic(cfg.points, K, p, delta, exact_repair)
        cb[r] = path.cbar_mean
        cb_first[r] = path.cbar
        Z[r] = path.Z
        Zp[r] = path.Z_prime
        for k in range(K + 1):
            zs[k].append(path.counts[k])
    inc = np.diff(cb, axis=1)
    var_z = np.array([np.concatenate(zs[k]).var(ddof=1) for k in range(K + 1)])
    return DyadicLedger(
        model=str(model), K=K, p=p, delta=delta, R=R, seed=seed,
        mean_cbar=cb.mean(0), se_cbar=cb.std(0, ddof=1) / math.sqrt(R),
        mean_cbar_first=cb_first.mean(0),
        mean_increment=inc.mean(0), se_increment=inc.std(0, ddof=1) / math.sqrt(R),
        var_Z=var_z, bound_term=bound_terms(var_z, p),
        mean_Z=Z.mean(0), mean_Z_prime=Zp.mean(0),
        meta={"model": str(model), "seed": seed, "R": R, "delta": delta, "exact_repair": exact_repair},
    )


@dataclass
class SeriesReport:
    terms: np.ndarray
    partial_sums: np.ndarray
    ratio: float
    verdict: str


def lemma_cvg_series(f_dyadic, p: float, tail: float = 0.5) -> SeriesReport:
    """Series ``sum_k 2**-k f(2**k)**((1+p)/2) + f(2**k)**(1/2) 2**(k(p-1)) / 2`` on the observed range.

    ``f_dyadic[k] = f(2**k)``.  The ratio estimate is ``2**slope`` of a
    least-squares fit of ``log2(term)`` against ``k`` over the last ``tail``
    fraction of levels; ratio below 1 gives ``summable``.
    """
    f = np.asarray(f_dyadic, dtype=float)
    if np.any(f < 0):
        raise ValueError("variance values must be non-negative")
    terms = bound_terms(f, p)
    ps = np.cumsum(terms)
    k = np.arange(len(f))
    start = min(int(len(f) * (1 - tail)), len(f) - 2)
    sel = slice(max(start, 0), None)
    pos = terms[sel] > 0
    if pos.sum() < 2:
        ratio = 0.0
    else:
        slope = np.polyfit(k[sel][pos], np.log2(terms[sel][pos]), 1)[0]
        ratio = float(2.0**slope)
    verdict = "summable" if ratio < 1 else "not summable at observed range"
    return SeriesReport(terms, ps, ratio, verdict)


@dataclass
class ClassifierReport:
    p: float
    gamma: float
    gamma_ci: tuple
    exponent: float
    exponent_ci: tuple
    growth_model: str
    verdict: str

    @property
    def finite_below_p(self) -> bool:
        return self.verdict.startswith("finite")


def theorem_i_classifier(n_grid, f, p: float, se=None, growth_model: str | None = None) -> ClassifierReport:
    """Decide whether ``sqrt(f(n)) n**(p-1)`` stays bounded, which gives finite cost for all ``q < p``.

    The growth exponent ``gamma`` of ``f`` comes from a weighted power-law fit;
    the quantity then scales like ``n**(gamma/2 + p - 1)``.  A log or bounded
    growth law counts as ``gamma = 0``.  Verdicts: ``finite for all q<p``
    (exponent CI below 0), ``finite for all q<p (boundary)`` (CI contains 0),
    ``not established`` (CI above 0).
    """
    from .estimators import fit_power_law, select_growth_model

    n = np.asarray(n_grid, dtype=float)
    f = np.asarray(f, dtype=float)
    fit = fit_power_law(n, f, se)
    model = growth_model or select_growth_model(n, f, se)
    if model in ("log", "bounded"):
        g, lo, hi = 0.0, 0.0, 0.0
    else:
        g, (lo, hi) = fit.slope, fit.ci
    e, e_lo, e_hi = g / 2 + p - 1, lo / 2 + p - 1, hi / 2 + p - 1
    if e_hi < 0:
        verdict = "finite for all q<p"
    elif e_lo <= 0:
        verdict = "finite for all q<p (boundary)"
    else:
        verdict = "not established"
    return ClassifierReport(p, g, (lo, hi), e, (e_lo, e_hi), model, verdict)
