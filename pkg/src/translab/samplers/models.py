"""Catalogue of unit-intensity point-process models and seeded sampling entry points.

Model specs are short strings ``kind[:key=value,...]``, for example
``poisson``, ``poisson:min_count=320``, ``cpoisson``, ``lattice:sigma=0.5``,
``renewal:law=gamma,shape=4``, ``pareto:alpha=1.5``, ``sine:m=32`` and
``cbe:beta=2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .base import INTERVAL, TORUS, PointConfiguration, WindowSpec, make_rng, separate_ties, validate_seed
from .cbe import sample_cbe_points
from .lattice import sample_lattice_points
from .poisson import sample_poisson_points, sample_uniform_points
from .renewal import InterarrivalLaw, sample_renewal_points
from .sine_dpp import sample_sine_points, spectrum

# kind -> (allowed parameters with defaults, supported topologies)
_CATALOGUE = {
    "poisson": ({"min_count": 0}, (INTERVAL, TORUS)),
    "cpoisson": ({}, (TORUS,)),
    "lattice": ({"sigma": 0.5}, (INTERVAL, TORUS)),
    "renewal": ({"law": "gamma", "shape": 4.0}, (INTERVAL,)),
    "pareto": ({"alpha": 1.5}, (INTERVAL,)),
    "sine": ({"m": 32}, (INTERVAL,)),
    "cbe": ({"beta": 2.0}, (TORUS,)),
}

_RENEWAL_LAWS = ("gamma", "exponential", "deterministic")


def _fmt(v):
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    return str(v)


def _coerce(default, raw):
    if isinstance(default, str):
        return raw
    if isinstance(default, int) and not isinstance(default, bool):
        v = float(raw)
        if v != int(v):
            raise ValueError(f"expected an integer, got {raw!r}")
        return int(v)
    return float(raw)


@dataclass(frozen=True)
class ProcessModel:
    kind: str
    params: tuple = ()

    @classmethod
    def parse(cls, spec) -> "ProcessModel":
        if isinstance(spec, ProcessModel):
            return spec
        spec = str(spec).strip()
        kind, _, rest = spec.partition(":")
        kind = kind.strip().lower()
        if kind not in _CATALOGUE:
            raise ValueError(f"unknown model {kind!r}; choose from {sorted(_CATALOGUE)}")
        defaults = _CATALOGUE[kind][0]
        vals = dict(defaults)
        for item in filter(None, (s.strip() for s in rest.split(","))):
            key, eq, raw = item.partition("=")
            key = key.strip()
            if not eq or key not in defaults:
                raise ValueError(f"model {kind!r} has no parameter {key!r}")
            vals[key] = _coerce(defaults[key], raw.strip())
        return cls(kind, tuple(sorted(vals.items()))).validate()

    def param(self, key, default=None):
        return dict(self.params).get(key, default)

    @property
    def spec(self) -> str:
        """Canonical spec string; parameters at their default value are omitted."""
        defaults = _CATALOGUE[self.kind][0]
        parts = [f"{k}={_fmt(v)}" for k, v in self.params if v != defaults[k]]
        return self.kind + (":" + ",".join(parts) if parts else "")

    @property
    def topologies(self) -> tuple:
        return _CATALOGUE[self.kind][1]

    def validate(self) -> "ProcessModel":
        k = self.kind
        if k == "lattice" and self.param("sigma") < 0:
            raise ValueError("lattice sigma must be >= 0")
        if k == "sine" and self.param("m") < 8:
            raise ValueError("sine-kernel grid resolution m must be >= 8")
        if k == "cbe" and not self.param("beta") > 0:
            raise ValueError("beta must be > 0")
        if k == "poisson" and self.param("min_count") < 0:
            raise ValueError("min_count must be >= 0")
        if k in ("renewal", "pareto"):
            self.interarrival().validate()
        return self

    def interarrival(self) -> InterarrivalLaw:
        if self.kind == "pareto":
            return InterarrivalLaw.pareto(self.param("alpha"))
        law = self.param("law")
        if law == "gamma":
            return InterarrivalLaw.gamma(self.param("shape"))
        if law == "exponential":
            return InterarrivalLaw.exponential(1.0)
        if law == "deterministic":
            return InterarrivalLaw.deterministic(1.0)
        raise ValueError(f"unknown renewal law {law!r}; choose from {_RENEWAL_LAWS}")

    def default_topology(self) -> str:
        return self.topologies[0]

    def __str__(self):
        return self.spec


def _draw(model: ProcessModel, window: WindowSpec, rng: np.random.Generator) -> np.ndarray:
    n = window.length
    k = model.kind
    torus = window.is_torus
    if k == "poisson":
        return sample_poisson_points(n, rng, model.param("min_count"))
    if k == "cpoisson":
        return sample_uniform_points(_integer_size(n), n, rng)
    if k == "lattice":
        return sample_lattice_points(n, model.param("sigma"), rng, torus=torus)
    if k in ("renewal", "pareto"):
        return sample_renewal_points(model.interarrival(), n, rng)
    if k == "sine":
        return sample_sine_points(n, model.param("m"), rng)
    if k == "cbe":
        return sample_cbe_points(_integer_size(n), model.param("beta"), rng)
    raise ValueError(f"unknown model {k!r}")


def _integer_size(n):
    N = int(round(n))
    if abs(N - n) > 1e-9 or N < 2:
        raise ValueError(f"torus ensembles need an integer size >= 2, got {n}")
    return N


def check_topology(model: ProcessModel, window: WindowSpec):
    if window.topology not in model.topologies:
        raise ValueError(f"model {model.spec!r} cannot be sampled on the {window.topology} topology "
                         f"(supported: {', '.join(model.topologies)})")


def sample(model, window, seed: int, replica: int = 0) -> PointConfiguration:
    """One realization; a pure function of ``(model, window, seed, replica)``."""
    model = ProcessModel.parse(model)
    if not isinstance(window, WindowSpec):
        window = WindowSpec(float(window), model.default_topology())
    check_topology(model, window)
    seed = validate_seed(seed)
    if window.length == 0:
        return PointConfiguration(np.empty(0), window, (seed, replica))
    rng = make_rng(seed, replica)
    pts = separate_ties(_draw(model, window, rng))
    return PointConfiguration(pts, window, (seed, replica), {"model": model.spec})


def sample_counts(model, n_grid, R: int, seed: int, torus_size: int | None = None) -> np.ndarray:
    """Counts ``mu([0, n))`` for every ``n`` in the grid, shape ``(R, len(n_grid))``.

    Interval models use one path on ``[0, max n)`` per replica (nested
    windows).  The sine-kernel model draws each count from the exact count law
    of the discretized kernel on ``[0, n)``.  Torus models sample one
    configuration of size ``torus_size`` (default ``2 * max n``) per replica and
    count points in ``[s, s + n)`` at a uniform start ``s``.
    """
    model = ProcessModel.parse(model)
    seed = validate_seed(seed)
    grid = np.asarray(n_grid, dtype=float)
    if np.any(np.diff(grid) <= 0) or np.any(grid <= 0):
        raise ValueError("n grid must be positive and strictly increasing")
    out = np.empty((R, len(grid)), dtype=np.int64)
    if model.kind == "sine":
        specs = [spectrum(float(n), model.param("m")) for n in grid]
        for r in range(R):
            rng = make_rng(seed, r)
            out[r] = [s.sample_count(rng) for s in specs]
        return out
    if TORUS in model.topologies and INTERVAL not in model.topologies:
        N = int(torus_size or 2 * math.ceil(grid[-1]))
        if grid[-1] > N:
            raise ValueError("arc lengths must not exceed the torus size")
        w = WindowSpec(float(N), TORUS)
        for r in range(R):
            cfg = sample(model, w, seed, r)
            s = make_rng(seed, r, 1).uniform(0.0, N)
            out[r] = [cfg.count(s, s + t) for t in grid]
        return out
    w = WindowSpec(float(grid[-1]), INTERVAL)
    for r in range(R):
        pts = sample(model, w, seed, r).points
        out[r] = np.searchsorted(pts, grid, "left")
    return out


def sine_count_moments(n: float, m: int = 32) -> tuple[float, float]:
    """Exact mean and variance of the discretized sine-kernel count on ``[0, n)``."""
    lam = spectrum(float(n), int(m)).eigenvalues
    return float(lam.sum()), float((lam * (1 - lam)).sum())
