"""Spectral (HKPV) sampling of the sine-kernel determinantal process on ``[0, n]``.

The kernel ``sin(pi (x - y)) / (pi (x - y))`` is discretized by midpoint
quadrature with ``m`` nodes per unit length.  Small grids are diagonalized
directly; large grids go through an exact low-rank factorization of the same
matrix (Gauss-Legendre in frequency, closed-form geometric sums in space), so
the eigenpairs are those of the discretized kernel either way.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

EIG_TOL = 1e-6
DENSE_LIMIT = 1024
_TINY = 1e-14


class DiscretizationError(RuntimeError):
    pass


def grid_size(n: float, m: int) -> int:
    g = n * m
    if abs(g - round(g)) > 1e-9:
        raise ValueError(f"m*n must be an integer number of grid nodes, got {g}")
    return int(round(g))


def grid(n: float, m: int) -> np.ndarray:
    return (np.arange(grid_size(n, m)) + 0.5) / m


def _dense_spectrum(G: int, m: int):
    x = (np.arange(G) + 0.5) / m
    K = np.sinc(x[:, None] - x[None, :]) / m
    lam, vec = np.linalg.eigh(K)
    return lam, vec


def _sum_cos(theta, G):
    s = np.sin(theta / 2)
    small = np.abs(s) < 1e-13
    out = np.where(small, float(G), np.sin(G * theta) / (2 * np.where(small, 1.0, s)))
    return out


def _sum_sin(theta, G):
    s = np.sin(theta / 2)
    small = np.abs(s) < 1e-13
    return np.where(small, 0.0, (1 - np.cos(G * theta)) / (2 * np.where(small, 1.0, s)))


def _factored_spectrum(G: int, m: int):
    n = G / m
    Q = int(np.ceil(0.8 * np.pi * n)) + 40
    t, w = np.polynomial.legendre.leggauss(Q)
    xi = 0.25 * (t + 1.0)  # nodes on [0, 1/2]
    om = 0.25 * w
    a = 2 * np.pi * xi / m  # phase per grid step
    dif = a[:, None] - a[None, :]
    sm = a[:, None] + a[None, :]
    cc = 0.5 * (_sum_cos(dif, G) + _sum_cos(sm, G))
    ss = 0.5 * (_sum_cos(dif, G) - _sum_cos(sm, G))
    cs = 0.5 * (_sum_sin(sm, G) - _sum_sin(dif, G))  # sum_i cos(a_q x_i) sin(a_r x_i)
    BtB = np.block([[cc, cs], [cs.T, ss]])
    d = np.sqrt(np.concatenate([2 * om, 2 * om]))
    gram = d[:, None] * BtB * d[None, :] / m
    lam, u = np.linalg.eigh(gram)
    return lam, u, a, d


class SineKernelSpectrum:
    """Eigenpairs of the discretized sine kernel on ``G = n*m`` midpoint nodes."""

    def __init__(self, n: float, m: int):
        self.n = n
        self.m = m
        self.G = grid_size(n, m)
        self.x = (np.arange(self.G) + 0.5) / m
        if self.G <= DENSE_LIMIT:
            lam, self._vec = _dense_spectrum(self.G, m)
            self._factor = None
        else:
            lam, u, a, d = _factored_spectrum(self.G, m)
            self._vec = None
            self._factor = (u, a, d)
        if len(lam) and (lam.min() < -EIG_TOL or lam.max() > 1 + EIG_TOL):
            raise DiscretizationError(
                f"sine-kernel eigenvalues left [0, 1] (range {lam.min():.3g}..{lam.max():.3g}); "
                "increase the grid resolution m"
            )
        self.raw_eigenvalues = lam
        self.eigenvalues = np.clip(lam, 0.0, 1.0)
        self._cache = {}

    def eigenvectors(self, idx: np.ndarray) -> np.ndarray:
        """Grid-normalized eigenvectors for the selected indices (columns)."""
        idx = np.asarray(idx, dtype=int)
        if self._vec is not None:
            return self._vec[:, idx]
        missing = [int(i) for i in idx if int(i) not in self._cache]
        if missing:
            V = self._build(np.array(missing, dtype=int))
            for c, i in enumerate(missing):
                self._cache[i] = V[:, c]
        if len(idx) == 0:
            return np.zeros((self.G, 0))
        return np.stack([self._cache[int(i)] for i in idx], axis=1)

    def _build(self, idx):
        u, a, d = self._factor
        i = np.arange(self.G) + 0.5
        Q = len(a)
        coef = d[:, None] * u[:, idx]
        ph = i[:, None] * a[None, :]
        V = np.cos(ph) @ coef[:Q] + np.sin(ph) @ coef[Q:]
        V /= np.linalg.norm(V, axis=0)
        return V

    def sample_count(self, rng: np.random.Generator) -> int:
        lam = self.eigenvalues
        sure = int(np.count_nonzero(lam >= 1 - _TINY))
        live = lam[(lam > _TINY) & (lam < 1 - _TINY)]
        return sure + int(np.count_nonzero(rng.random(len(live)) < live))


@lru_cache(maxsize=32)
def spectrum(n: float, m: int) -> SineKernelSpectrum:
    return SineKernelSpectrum(float(n), int(m))


def hkpv_sample(V: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Indices drawn from the projection DPP spanned by the orthonormal columns of ``V``."""
    G, k = V.shape
    if k == 0:
        return np.empty(0, dtype=int)
    d = np.einsum("ij,ij->i", V, V)
    U = np.zeros((k, k))
    chosen = np.empty(k, dtype=int)
    for t in range(k):
        w = np.clip(d, 0.0, None)
        c = np.cumsum(w)
        i = int(np.searchsorted(c, rng.random() * c[-1], "right"))
        i = min(i, G - 1)
        chosen[t] = i
        r = V[i] - U[:t].T @ (U[:t] @ V[i])
        nr = np.linalg.norm(r)
        if nr <= 0:
            raise RuntimeError("degenerate projection during HKPV sampling")
        u = r / nr
        U[t] = u
        d -= (V @ u) ** 2
        d[i] = 0.0
    return np.sort(chosen)


def sample_sine_points(n: float, m: int, rng: np.random.Generator) -> np.ndarray:
    sp = spectrum(n, m)
    sel = np.flatnonzero(rng.random(len(sp.eigenvalues)) < sp.eigenvalues)
    idx = hkpv_sample(sp.eigenvectors(sel), rng)
    return sp.x[idx]
