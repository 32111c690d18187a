"""Structure of optimal semicouplings near the window edges."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .semicoupling import SemicouplingPlan


@dataclass
class BoundaryDiagnostics:
    """Support endpoints ``l, r``, edge targets ``a, b`` and the overflow event flag.

    ``a = T(l/2)`` when ``l < 0`` (else 0), ``b = T(n + (r - n)/2)`` when
    ``r > n`` (else ``n``), ``c = n - b``; ``kappa = (a + c)/n``.
    """

    n: float
    l: float
    r: float
    a: float
    b: float
    c: float
    kappa: float
    count: int
    in_event: bool | None
    wide_overhang: bool | None

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _target_near(plan: SemicouplingPlan, x: float) -> float:
    t = plan.map(np.array([x]))[0]
    if not math.isnan(t):
        return float(t)
    # unused containing cell: fall back to the nearest used cell
    used = np.flatnonzero(plan.cell_atom >= 0)
    c = plan.supply.centers[used]
    k = used[np.argmin(np.abs(c - x))]
    return float(plan.atoms[plan.cell_atom[k]])


def boundary_diagnostics(plan: SemicouplingPlan, variance: float | None = None) -> BoundaryDiagnostics:
    """Edge quantities of a plan; with ``variance`` also the event ``count >= n + 4 sqrt(variance)``.

    ``wide_overhang`` reports whether ``|l|`` or ``|r - n|`` reaches
    ``2 sqrt(variance)``.
    """
    n = plan.n
    l, r = float(plan.l), float(plan.r)
    a = _target_near(plan, 0.5 * l) if l < 0 else 0.0
    b = _target_near(plan, n + 0.5 * (r - n)) if r > n else n
    a = min(max(a, 0.0), n)
    b = min(max(b, 0.0), n)
    c = n - b
    count = len(plan.atoms)
    in_event = wide = None
    if variance is not None:
        sd = math.sqrt(variance)
        in_event = bool(count >= n + 4.0 * sd)
        wide = bool(abs(l) >= 2.0 * sd or abs(r - n) >= 2.0 * sd)
    return BoundaryDiagnostics(n, l, r, a, b, c, (a + c) / n if n > 0 else 0.0, count, in_event, wide)


@dataclass
class MonotonicityReport:
    left_cells: int
    right_cells: int
    left_violations: int
    right_violations: int

    @property
    def violations(self) -> int:
        return self.left_violations + self.right_violations

    @property
    def ok(self) -> bool:
        return self.violations == 0


def _count_increases(x: np.ndarray, t: np.ndarray, tol: float) -> int:
    # cells farther out must not map closer to the edge than cells nearer to it
    bad = 0
    j = 0
    run_min = math.inf
    for i in range(len(x)):
        while j < i and x[j] < x[i] - tol:
            run_min = min(run_min, t[j])
            j += 1
        if t[i] > run_min:
            bad += 1
    return bad


def edge_monotonicity_check(plan: SemicouplingPlan) -> MonotonicityReport:
    """Count overhang cells where the map fails to be non-increasing.

    On both overhangs (``x < 0`` and ``x > n``) the optimal map is
    non-increasing in ``x``; cells closer than one cell width are not compared.
    Refuses ``p = 1``, where optimal plans are not unique.
    """
    if plan.p >= 1.0:
        raise ValueError("edge monotonicity needs a strictly concave cost (p < 1)")
    centers = plan.supply.centers
    used = plan.cell_atom >= 0
    tol = plan.delta * (1 + 1e-9)
    out = []
    for side in (centers < 0, centers > plan.n):
        sel = used & side
        x = centers[sel]
        t = plan.atoms[plan.cell_atom[sel]]
        out.append((len(x), _count_increases(x, t, tol)))
    return MonotonicityReport(out[0][0], out[1][0], out[0][1], out[1][1])


@dataclass
class EventStudy:
    """Per-instance boundary structure on realizations conditioned on a large count."""

    n: float
    p: float
    variance: float
    threshold: int
    diagnostics: list
    monotonicity: list

    @property
    def instances(self) -> int:
        return len(self.diagnostics)

    @property
    def wide_fraction(self) -> float:
        if not self.diagnostics:
            return float("nan")
        return sum(bool(d.wide_overhang) for d in self.diagnostics) / len(self.diagnostics)

    @property
    def monotonicity_violations(self) -> int:
        return sum(m.violations for m in self.monotonicity)

    @property
    def kappa(self) -> np.ndarray:
        return np.array([d.kappa for d in self.diagnostics])

    def summary(self) -> dict:
        k = self.kappa
        return {
            "n": self.n,
            "p": self.p,
            "variance": self.variance,
            "threshold": self.threshold,
            "instances": self.instances,
            "wide_fraction": self.wide_fraction,
            "monotonicity_violations": self.monotonicity_violations,
            "kappa_min": float(k.min()) if len(k) else float("nan"),
            "kappa_mean": float(k.mean()) if len(k) else float("nan"),
        }


def event_a_n_study(n: int, p: float, R: int, seed: int, delta: float = 1.0 / 64, variance: float | None = None,
                    certify: bool = True) -> EventStudy:
    """Solve Poisson instances conditioned on ``count >= n + 4 sqrt(Var)`` and collect edge structure.

    ``variance`` defaults to the Poisson value ``n``.  For ``p < 1`` every plan
    is also passed through :func:`edge_monotonicity_check`.
    """
    from ..samplers import sample
    from .semicoupling import adaptive_padding

    var = float(n) if variance is None else float(variance)
    K = math.ceil(n + 4.0 * math.sqrt(var))
    model = f"poisson:min_count={K}"
    diags, mono = [], []
    for r in range(R):
        cfg = sample(model, float(n), seed, r)
        plan = adaptive_padding(cfg, p, delta=delta, certify=certify)
        diags.append(boundary_diagnostics(plan, var))
        if p < 1:
            mono.append(edge_monotonicity_check(plan))
    return EventStudy(float(n), float(p), var, K, diags, mono)
