"""Circular beta ensemble eigenangles from random Verblunsky coefficients.

The coefficients follow the Killip-Nenciu law: ``alpha_k`` (``k < N-1``) is
rotation invariant with ``|alpha_k|**2 ~ Beta(1, beta*(N-k-1)/2)`` and
``alpha_{N-1}`` is uniform on the unit circle.  Eigenangles are the zeros of
the degree-``N`` orthogonal polynomial, found either by root-bracketing its
Pruefer phase (default, ``O(N^2)``) or by dense diagonalization of the CMV
matrix (reference).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi


class EigenSolverError(RuntimeError):
    pass


def verblunsky(N: int, beta: float, rng: np.random.Generator) -> np.ndarray:
    if N < 2:
        raise ValueError("circular ensemble needs N >= 2")
    if not beta > 0:
        raise ValueError("beta must be positive")
    k = np.arange(N - 1)
    r2 = rng.beta(1.0, beta * (N - k - 1) / 2.0)
    ph = rng.uniform(0.0, TWO_PI, N)
    alpha = np.empty(N, dtype=complex)
    alpha[:-1] = np.sqrt(r2) * np.exp(1j * ph[:-1])
    alpha[-1] = np.exp(1j * ph[-1])
    return alpha


@njit(cache=True)
def _phase(theta, re, im):
    # Pruefer phase of B_{N-1}(e^{i theta}) = e^{i psi}
    psi = theta
    for k in range(re.size - 1):
        c = math.cos(psi)
        s = math.sin(psi)
        wr = 1.0 - (re[k] * c - im[k] * s)
        wi = -(re[k] * s + im[k] * c)
        psi += theta - 2.0 * math.atan2(wi, wr)
    return psi


@njit(cache=True)
def _phase_d(theta, re, im):
    # phase and its theta-derivative
    psi = theta
    dpsi = 1.0
    for k in range(re.size - 1):
        c = math.cos(psi)
        s = math.sin(psi)
        ar = re[k] * c - im[k] * s
        ai = re[k] * s + im[k] * c
        wr = 1.0 - ar
        wi = -ai
        # d arg(w)/d psi = Im(-i a / w) = -Re(a / w)
        den = wr * wr + wi * wi
        darg = -(ar * wr + ai * wi) / den
        psi += theta - 2.0 * math.atan2(wi, wr)
        dpsi = dpsi * (1.0 - 2.0 * darg) + 1.0
    return psi, dpsi


@njit(cache=True)
def _roots(re, im, iters):
    N = re.size
    target0 = -math.atan2(im[N - 1], re[N - 1])
    G = 2 * N
    grid = np.empty(G + 1)
    for g in range(G + 1):
        grid[g] = _phase(2 * math.pi * g / G, re, im)
    j0 = math.ceil((grid[0] - target0) / (2 * math.pi))
    out = np.empty(N)
    g = 0
    for r in range(N):
        tgt = target0 + 2 * math.pi * (j0 + r)
        while g < G - 1 and grid[g + 1] < tgt:
            g += 1
        lo = 2 * math.pi * g / G
        hi = 2 * math.pi * (g + 1) / G
        span = grid[g + 1] - grid[g]
        x = lo + (hi - lo) * ((tgt - grid[g]) / span if span > 0 else 0.5)
        for _ in range(iters):
            f, df = _phase_d(x, re, im)
            f -= tgt
            if f < 0:
                lo = x
            else:
                hi = x
            nx = x - f / df if df > 0 else 0.5 * (lo + hi)
            if not (lo < nx < hi):
                nx = 0.5 * (lo + hi)
            if abs(nx - x) < 1e-15 or hi - lo < 1e-15:
                x = nx
                break
            x = nx
        out[r] = x
    return out


def eigenangles_prufer(alpha: np.ndarray, iters: int = 52) -> np.ndarray:
    theta = _roots(np.ascontiguousarray(alpha.real), np.ascontiguousarray(alpha.imag), iters)
    if len(theta) != len(alpha) or not np.all(np.isfinite(theta)) or np.any(np.diff(theta) < 0):
        raise EigenSolverError("phase root bracketing did not return N ordered eigenangles")
    return np.mod(theta, TWO_PI)


def cmv_matrix(alpha: np.ndarray) -> np.ndarray:
    N = len(alpha)
    rho = np.sqrt(np.clip(1.0 - np.abs(alpha) ** 2, 0.0, None))

    def blocks(start):
        A = np.zeros((N, N), dtype=complex)
        if start == 1:
            A[0, 0] = 1.0
        for k in range(start, N, 2):
            if k == N - 1:
                A[k, k] = np.conj(alpha[k])
            else:
                A[k:k + 2, k:k + 2] = [[np.conj(alpha[k]), rho[k]], [rho[k], -alpha[k]]]
        return A

    return blocks(0) @ blocks(1)


def eigenangles_dense(alpha: np.ndarray) -> np.ndarray:
    ev = np.linalg.eigvals(cmv_matrix(alpha))
    if len(ev) != len(alpha) or np.max(np.abs(np.abs(ev) - 1.0)) > 1e-6:
        raise EigenSolverError("CMV spectrum is not unimodular")
    return np.sort(np.mod(np.angle(ev), TWO_PI))


def sample_cbe_points(N: int, beta: float, rng: np.random.Generator, method: str = "prufer") -> np.ndarray:
    """Eigenangles rescaled to a circle of circumference ``N``."""
    alpha = verblunsky(N, beta, rng)
    if method == "prufer":
        th = eigenangles_prufer(alpha)
    elif method == "dense":
        th = eigenangles_dense(alpha)
    else:
        raise ValueError(f"unknown eigen method {method!r}")
    x = np.sort(th * (N / TWO_PI))
    x[x >= N] -= N
    return np.sort(x)
