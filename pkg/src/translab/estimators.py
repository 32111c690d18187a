"""Monte Carlo curves over a window-size grid, growth-law fits and threshold estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .samplers import ProcessModel, WindowSpec, make_rng, sample, sample_counts
from .samplers.sine_dpp import spectrum
from .transport import adaptive_padding
from .transport.costs import as_cost

CAMPAIGN_DELTA = 1.0 / 8
Z95 = 1.959963984540054


@dataclass
class CostCurve:
    """Mean and standard error of a statistic along a window-size grid."""

    n: np.ndarray
    mean: np.ndarray
    se: np.ndarray
    R: int
    kind: str
    model: str
    seed: int
    delta: float | None = None
    p: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.n = np.asarray(self.n, dtype=float)
        self.mean = np.asarray(self.mean, dtype=float)
        self.se = np.asarray(self.se, dtype=float)
        if np.any(np.diff(self.n) <= 0):
            raise ValueError("n grid must be strictly increasing")

    def rows(self):
        return [(n, m, s, self.R) for n, m, s in zip(self.n, self.mean, self.se)]

    def provenance(self) -> dict:
        d = {"kind": self.kind, "model": self.model, "seed": self.seed, "R": self.R, "delta": self.delta}
        if self.p is not None:
            d["p"] = self.p
        d.update(self.meta)
        return d


def _check_grid(n_grid):
    g = np.asarray(n_grid, dtype=float)
    if g.ndim != 1 or len(g) < 1 or np.any(g <= 0) or np.any(np.diff(g) <= 0):
        raise ValueError("n grid must be positive and strictly increasing")
    return g


def variance_se(x: np.ndarray) -> tuple[float, float]:
    """Unbiased sample variance and its large-sample standard error."""
    R = len(x)
    v = float(np.var(x, ddof=1))
    m4 = float(np.mean((x - x.mean()) ** 4))
    se2 = (m4 - v**2 * (R - 3) / (R - 1)) / R
    return v, math.sqrt(max(se2, 0.0))


def _sine_counts_crn(n_grid, m, R, seed):
    # one uniform per eigenvalue, indexed by offset from the spectral edge
    specs = [spectrum(float(n), int(m)) for n in n_grid]
    lams = [np.sort(s.eigenvalues)[::-1] for s in specs]
    width = max(len(lam) for lam in lams)
    out = np.empty((R, len(n_grid)), dtype=np.int64)
    for r in range(R):
        u = make_rng(seed, r, 2).random(width)
        for j, (n, lam) in enumerate(zip(n_grid, lams)):
            c = int(round(n))
            idx = np.arange(len(lam)) - c
            out[r, j] = int(np.count_nonzero(u[idx % width] < lam))
    return out


def count_matrix(model, n_grid, R: int, seed: int, torus_size=None) -> np.ndarray:
    """Counts per replica and window size with common random numbers across the grid."""
    model = ProcessModel.parse(model)
    g = _check_grid(n_grid)
    if model.kind == "sine":
        return _sine_counts_crn(g, model.param("m"), R, seed)
    return sample_counts(model, g, R, seed, torus_size=torus_size)


def variance_curve(model, n_grid, R: int, seed: int, torus_size=None) -> CostCurve:
    """Unbiased sample variance of ``mu([0, n))`` per ``n``."""
    if R < 100:
        raise ValueError("variance curves need R >= 100")
    model = ProcessModel.parse(model)
    g = _check_grid(n_grid)
    C = count_matrix(model, g, R, seed, torus_size)
    vs = [variance_se(C[:, j].astype(float)) for j in range(len(g))]
    return CostCurve(g, [v for v, _ in vs], [s for _, s in vs], R, "variance", model.spec, seed)


def central_moment_curve(model, n_grid, R: int, seed: int, torus_size=None) -> CostCurve:
    """Mean absolute deviation ``E|n - mu([0, n))|`` per ``n``."""
    if R < 100:
        raise ValueError("central-moment curves need R >= 100")
    model = ProcessModel.parse(model)
    g = _check_grid(n_grid)
    C = count_matrix(model, g, R, seed, torus_size)
    dev = np.abs(C - g[None, :])
    return CostCurve(g, dev.mean(0), dev.std(0, ddof=1) / math.sqrt(R), R, "absdev", model.spec, seed)


def cost_samples(model, p_grid, n_grid, R: int, seed: int, delta: float = CAMPAIGN_DELTA,
                 certify: bool = False) -> np.ndarray:
    """Per-replica ``c_n(p) = cost / n``, shape ``(len(p_grid), len(n_grid), R)``.

    All exponents are solved on the same configurations.
    """
    model = ProcessModel.parse(model)
    g = _check_grid(n_grid)
    ps = [as_cost(p).p for p in p_grid]
    out = np.empty((len(ps), len(g), R))
    for j, n in enumerate(g):
        for r in range(R):
            cfg = sample(model, WindowSpec(float(n)), seed, r)
            if len(cfg) == 0:
                out[:, j, r] = 0.0
                continue
            for i, p in enumerate(ps):
                try:
                    plan = adaptive_padding(cfg, p, delta=delta, certify=certify)
                except Exception as exc:
                    raise RuntimeError(f"solver failed for model={model.spec} n={n} replica={r} p={p}: {exc}") from exc
                out[i, j, r] = plan.total_cost / n
    return out


def cost_curve(model, p: float, n_grid, R: int, seed: int, delta: float = CAMPAIGN_DELTA,
               certify: bool = False) -> CostCurve:
    """Mean per-length semicoupling cost ``c_n(p)`` with adaptive padding."""
    model = ProcessModel.parse(model)
    g = _check_grid(n_grid)
    c = cost_samples(model, [p], g, R, seed, delta, certify)[0]
    return CostCurve(g, c.mean(1), c.std(1, ddof=1) / math.sqrt(R), R, "cost", model.spec, seed, delta, p,
                     {"certify": certify})


@dataclass
class CLTResult:
    """KS diagnostics of standardized counts.

    ``pvalue`` is the plain KS test of ``(count - mean) / sd`` against the
    standard normal.  Integer counts with a small standard deviation fail it
    for discreteness alone, so ``pvalue_discrete`` tests the randomized
    probability integral transform under the normal law rounded to integers.
    """

    n: float
    ks: float
    pvalue: float
    pvalue_discrete: float
    support: int
    mean: float
    sd: float

    @property
    def normal(self) -> bool:
        # a count law on at most two values has no normal limit
        return self.support > 2 and self.pvalue_discrete > 0.001


def clt_diagnostic(model, n: float, R: int, seed: int) -> CLTResult:
    """Kolmogorov-Smirnov distance of standardized counts from the standard normal."""
    if R < 1000:
        raise ValueError("the CLT diagnostic needs R >= 1000")
    c = count_matrix(model, [n], R, seed)[:, 0].astype(float)
    sd = c.std(ddof=1)
    if sd == 0:
        raise ValueError("counts have zero sample standard deviation; no normal limit to test")
    mu = c.mean()
    res = stats.kstest((c - mu) / sd, "norm")
    lo = stats.norm.cdf((c - 0.5 - mu) / sd)
    hi = stats.norm.cdf((c + 0.5 - mu) / sd)
    u = lo + make_rng(seed, 0, 3).random(R) * (hi - lo)
    disc = stats.kstest(u, "uniform")
    return CLTResult(float(n), float(res.statistic), float(res.pvalue), float(disc.pvalue), len(np.unique(c)),
                     float(mu), float(sd))


# growth-law fits


@dataclass
class LinearFit:
    slope: float
    intercept: float
    slope_se: float
    ci: tuple
    rss: float
    r: float


def _wls(x, y, w):
    W = np.sum(w)
    xm = np.sum(w * x) / W
    ym = np.sum(w * y) / W
    sxx = np.sum(w * (x - xm) ** 2)
    b = np.sum(w * (x - xm) * (y - ym)) / sxx
    a = ym - b * xm
    res = y - a - b * x
    dof = max(len(x) - 2, 1)
    s2 = np.sum(w * res**2) / dof
    se = math.sqrt(s2 / sxx) if sxx > 0 else math.inf
    tq = stats.t.ppf(0.975, dof)
    r = np.corrcoef(x, y)[0, 1] if np.std(y) > 0 else 0.0
    return LinearFit(float(b), float(a), float(se), (float(b - tq * se), float(b + tq * se)),
                     float(np.sum(w * res**2)), float(r))


def fit_power_law(n, f, se=None) -> LinearFit:
    """Fit ``log f = gamma log n + c``, weighted by the delta-method variance of ``log f``."""
    n = np.asarray(n, dtype=float)
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise ValueError("power-law fit needs positive values")
    w = np.ones_like(f) if se is None else 1.0 / np.maximum((np.asarray(se) / f) ** 2, 1e-300)
    return _wls(np.log(n), np.log(f), w)


def fit_log_law(n, f, se=None) -> LinearFit:
    """Fit ``f = a log n + b``."""
    n = np.asarray(n, dtype=float)
    f = np.asarray(f, dtype=float)
    w = np.ones_like(f) if se is None else 1.0 / np.maximum(np.asarray(se) ** 2, 1e-300)
    return _wls(np.log(n), f, w)


def growth_residuals(n, f, se=None) -> dict:
    """Residual sums of the power-law and log-law fits, both measured on ``f`` in SE units."""
    n = np.asarray(n, dtype=float)
    f = np.asarray(f, dtype=float)
    s = np.ones_like(f) if se is None else np.asarray(se, dtype=float)
    pw = fit_power_law(n, f, se)
    lg = fit_log_law(n, f, se)
    fp = np.exp(pw.intercept) * n**pw.slope
    fl = lg.intercept + lg.slope * np.log(n)
    return {"power": float(np.sum(((f - fp) / s) ** 2)), "log": float(np.sum(((f - fl) / s) ** 2))}


def select_growth_model(n, f, se=None) -> str:
    """``bounded`` when the power-law exponent CI reaches 0, else the law with smaller residuals."""
    pw = fit_power_law(n, f, se)
    if pw.ci[0] <= 0:
        return "bounded"
    r = growth_residuals(n, f, se)
    return "log" if r["log"] < r["power"] else "power"


# regular variance


@dataclass
class RegularVarianceReport:
    n: np.ndarray
    ratios: dict
    verdicts: dict

    @property
    def regular(self) -> bool:
        return all(self.verdicts.values())


def _test_sequences():
    return {
        "n^0.8": lambda n: n**0.8,
        "n/log n": lambda n: n / np.log(n),
    }


def regular_variance_check(n, f, sequences=None, slope_tol: float = 0.02) -> RegularVarianceReport:
    """Ratios ``f(a_n) / f(n)`` for slowly growing test sequences ``a_n``.

    ``log f(a_n)`` is interpolated linearly in ``log n`` (exact for power laws); grid points whose
    ``a_n`` lies below the grid are skipped.  A sequence counts as evidence of
    regular variance when its ratios decrease along the grid with a log-log
    slope below ``-slope_tol``.
    """
    n = np.asarray(n, dtype=float)
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise ValueError("f must be positive on the grid")
    seqs = sequences or _test_sequences()
    ratios, verdicts = {}, {}
    ln = np.log(n)
    for name, a in seqs.items():
        an = a(n)
        ok = (an >= n[0]) & (n > 1)
        fa = np.exp(np.interp(np.log(an[ok]), ln, np.log(f)))
        rt = fa / f[ok]
        ratios[name] = np.full(len(n), np.nan)
        ratios[name][ok] = rt
        if ok.sum() < 2:
            verdicts[name] = False
            continue
        slope = np.polyfit(ln[ok], np.log(rt), 1)[0]
        verdicts[name] = bool(slope < -slope_tol)
    return RegularVarianceReport(n, ratios, verdicts)


# threshold estimate


@dataclass
class CostRouteRow:
    p: float
    slope: float
    ci: tuple
    growing: bool


@dataclass
class ScalingReport:
    model: str
    gamma: float
    gamma_ci: tuple
    log_coef: float
    log_coef_ci: tuple
    growth_model: str
    p_star_variance: float
    residuals: dict
    cost_rows: list = field(default_factory=list)
    p_star_cost: float | None = None
    clt: list = field(default_factory=list)
    regular: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def agreement(self) -> float | None:
        if self.p_star_cost is None:
            return None
        return abs(self.p_star_variance - self.p_star_cost)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "gamma": self.gamma,
            "gamma_ci": list(self.gamma_ci),
            "log_coef": self.log_coef,
            "log_coef_ci": list(self.log_coef_ci),
            "growth_model": self.growth_model,
            "p_star_variance": self.p_star_variance,
            "residuals": self.residuals,
            "cost_route": [
                {"p": r.p, "slope": r.slope, "ci": list(r.ci), "growing": r.growing} for r in self.cost_rows
            ],
            "p_star_cost": self.p_star_cost,
            "route_agreement": self.agreement,
            "clt": [{"n": c.n, "ks": c.ks, "pvalue": c.pvalue, "pvalue_discrete": c.pvalue_discrete} for c in self.clt],
            "regular_variance": self.regular,
            "meta": self.meta,
        }


def p_star_from_variance(curve: CostCurve) -> tuple:
    """Predicted threshold ``1 - gamma/2`` (power law) or 1 (log or bounded growth)."""
    model = select_growth_model(curve.n, curve.mean, curve.se)
    pw = fit_power_law(curve.n, curve.mean, curve.se)
    p_star = 1.0 if model in ("log", "bounded") else 1.0 - pw.slope / 2
    return p_star, model, pw


def classify_cost_curve(curve: CostCurve) -> CostRouteRow:
    """``growing`` when the 95% CI of the log-log slope of ``c_n`` lies above 0."""
    fit = fit_power_law(curve.n, curve.mean, curve.se)
    return CostRouteRow(curve.p, fit.slope, fit.ci, bool(fit.ci[0] > 0))


def p_star_from_cost(rows) -> float | None:
    """Midpoint between the largest bounded and the smallest growing exponent."""
    rows = sorted(rows, key=lambda r: r.p)
    growing = [r.p for r in rows if r.growing]
    bounded = [r.p for r in rows if not r.growing]
    if not rows:
        return None
    if not growing:
        return max(r.p for r in rows)
    if not bounded:
        return min(r.p for r in rows)
    lo = max([b for b in bounded if b < min(growing)], default=None)
    hi = min(growing)
    if lo is None:
        return hi
    return 0.5 * (lo + hi)


def threshold_estimate(model, p_grid, n_grid, R: int, seed: int, delta: float = CAMPAIGN_DELTA,
                       variance_R: int | None = None, cost_route: bool = True, certify: bool = False) -> ScalingReport:
    """Combine the variance route and the cost route into one report."""
    model = ProcessModel.parse(model)
    g = _check_grid(n_grid)
    vc = variance_curve(model, g, variance_R or max(R, 100), seed)
    p_var, gm, pw = p_star_from_variance(vc)
    lg = fit_log_law(vc.n, vc.mean, vc.se)
    report = ScalingReport(
        model=model.spec,
        gamma=pw.slope,
        gamma_ci=pw.ci,
        log_coef=lg.slope,
        log_coef_ci=lg.ci,
        growth_model=gm,
        p_star_variance=p_var,
        residuals=growth_residuals(vc.n, vc.mean, vc.se),
        regular=regular_variance_check(vc.n, vc.mean).verdicts,
        meta={"seed": seed, "R": R, "delta": delta, "variance_R": vc.R, "n_grid": g.tolist(),
              "p_grid": [float(p) for p in p_grid], "certify": certify},
    )
    if cost_route and len(p_grid):
        samples = cost_samples(model, p_grid, g, R, seed, delta, certify)
        for i, p in enumerate(p_grid):
            c = samples[i]
            curve = CostCurve(g, c.mean(1), c.std(1, ddof=1) / math.sqrt(R), R, "cost", model.spec, seed, delta, p)
            report.cost_rows.append(classify_cost_curve(curve))
        report.p_star_cost = p_star_from_cost(report.cost_rows)
    return report
