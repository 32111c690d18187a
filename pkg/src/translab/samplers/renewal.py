"""Stationary renewal processes with unit-mean interarrival laws."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MEAN_TOL = 1e-9


@dataclass(frozen=True)
class InterarrivalLaw:
    """Interarrival distribution of a renewal process.

    Supported kinds: ``deterministic`` (value), ``exponential`` (rate),
    ``gamma`` (shape, scale) and ``pareto`` (alpha, xm; classical Pareto with
    survival ``(xm/t)**alpha`` above ``xm``).
    """

    kind: str
    a: float = 1.0
    b: float = 1.0

    @classmethod
    def deterministic(cls, value=1.0):
        return cls("deterministic", float(value))

    @classmethod
    def exponential(cls, rate=1.0):
        return cls("exponential", float(rate))

    @classmethod
    def gamma(cls, shape, scale=None):
        shape = float(shape)
        return cls("gamma", shape, 1.0 / shape if scale is None else float(scale))

    @classmethod
    def pareto(cls, alpha, xm=None):
        alpha = float(alpha)
        return cls("pareto", alpha, (alpha - 1.0) / alpha if xm is None else float(xm))

    @property
    def mean(self) -> float:
        if self.kind == "deterministic":
            return self.a
        if self.kind == "exponential":
            return 1.0 / self.a
        if self.kind == "gamma":
            return self.a * self.b
        if self.kind == "pareto":
            return self.a * self.b / (self.a - 1.0) if self.a > 1 else np.inf
        raise ValueError(f"unknown interarrival law {self.kind!r}")

    @property
    def variance(self) -> float:
        if self.kind == "deterministic":
            return 0.0
        if self.kind == "exponential":
            return 1.0 / self.a**2
        if self.kind == "gamma":
            return self.a * self.b**2
        if self.kind == "pareto":
            return np.inf if self.a <= 2 else self.a * self.b**2 / ((self.a - 1) ** 2 * (self.a - 2))
        raise ValueError(f"unknown interarrival law {self.kind!r}")

    def validate(self):
        if self.kind == "pareto" and not (1.0 < self.a < 2.0):
            raise ValueError(f"Pareto tail index must lie in (1, 2), got {self.a}")
        if self.kind == "gamma" and not (self.a > 0 and self.b > 0):
            raise ValueError("gamma shape and scale must be positive")
        if self.kind == "exponential" and not self.a > 0:
            raise ValueError("exponential rate must be positive")
        if abs(self.mean - 1.0) > MEAN_TOL:
            raise ValueError(f"interarrival law must have unit mean, got mean {self.mean!r}")
        return self

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "deterministic":
            return np.full(size, self.a)
        if self.kind == "exponential":
            return rng.exponential(1.0 / self.a, size)
        if self.kind == "gamma":
            return rng.gamma(self.a, self.b, size)
        if self.kind == "pareto":
            return self.b * (1.0 - rng.random(size)) ** (-1.0 / self.a)
        raise ValueError(f"unknown interarrival law {self.kind!r}")

    def sample_delay(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Forward recurrence time at 0 under the stationary (integrated-tail) law."""
        u = rng.random(size)
        if self.kind == "deterministic":
            return u * self.a
        if self.kind == "exponential":
            return -np.log1p(-u) / self.a
        if self.kind == "gamma":
            # uniform fraction of a length-biased gap; length bias of Gamma(k) is Gamma(k+1)
            return u * rng.gamma(self.a + 1.0, self.b, size)
        if self.kind == "pareto":
            alpha, xm = self.a, self.b
            mu = self.mean
            head = u * mu
            base = xm ** (1.0 - alpha) + (1.0 - alpha) * (u * mu - xm) / xm**alpha
            with np.errstate(invalid="ignore", divide="ignore"):
                tail = base ** (1.0 / (1.0 - alpha))
            return np.where(u * mu <= xm, head, tail)
        raise ValueError(f"unknown interarrival law {self.kind!r}")


def sample_renewal_points(law: InterarrivalLaw, length: float, rng: np.random.Generator) -> np.ndarray:
    """Stationary renewal points in ``[0, length)``."""
    if length <= 0:
        return np.empty(0)
    first = law.sample_delay(rng, 1)[0]
    if first >= length:
        return np.empty(0)
    pts = [np.array([first])]
    last = first
    chunk = max(16, int(1.2 * (length - first) / law.mean) + 16)
    while True:
        steps = last + np.cumsum(law.sample(rng, chunk))
        cut = np.searchsorted(steps, length, "left")
        pts.append(steps[:cut])
        if cut < chunk:
            break
        last = steps[-1]
    return np.concatenate(pts)
