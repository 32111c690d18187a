"""Compiled kernels for unit-item transport on the line and on the circle.

Problem form used throughout: ``M`` supply units (sorted positions ``sp``,
common half-width ``hw``; ``hw = 0`` means point masses) and ``N`` atoms
(sorted positions ``ap``) where atom ``j`` demands ``units[j]`` supply units.
Each supply unit serves at most one atom.  ``C > 0`` selects the circle of
circumference ``C``.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

INF = np.inf


@njit(cache=True)
def avg_power(d, hw, p):
    """Mean of ``|x|**p`` for ``x`` uniform on ``[d - hw, d + hw]`` (``d >= 0``)."""
    if hw <= 0.0:
        return d**p
    q = p + 1.0
    if d >= hw:
        if d == hw:
            return (2.0 * hw) ** q / (2.0 * hw * q)
        h = hw / d
        return d**q * (1.0 - h) ** q * math.expm1(2.0 * q * math.atanh(h)) / (2.0 * hw * q)
    return ((hw + d) ** q + (hw - d) ** q) / (2.0 * hw * q)


@njit(cache=True)
def _int_abs_pow(a, b, p):
    q = p + 1.0
    fa = math.copysign(abs(a) ** q, a) / q
    fb = math.copysign(abs(b) ** q, b) / q
    return fb - fa


@njit(cache=True)
def pair_cost(s, hw, y, p, C):
    t = s - y
    if C > 0.0:
        half = 0.5 * C
        t = t - C * math.floor(t / C + 0.5)
        if hw > 0.0 and abs(t) + hw > half:
            lo = t - hw
            hi = t + hw
            if hi > half:
                tot = _int_abs_pow(lo, half, p) + _int_abs_pow(-half, hi - C, p)
            else:
                tot = _int_abs_pow(-half, hi, p) + _int_abs_pow(lo + C, half, p)
            return tot / (2.0 * hw)
    return avg_power(abs(t), hw, p)


# level decomposition warm start


@njit(cache=True)
def _solve_level(st, si, sp, hw, ap, p, band, sigma):
    T = st.size
    odd = T % 2
    if odd == 1 and st[0] == 1:
        return False
    B = min(band, T - odd)
    B -= B % 2
    H = B // 2
    P = np.full((T + 1, H + 1), INF)
    ch = np.zeros((T + 1, H + 1), np.int64)
    for a in range(T + 1):
        P[a, 0] = 0.0
    # arc costs: cost[a, g] pairs item a with item a + 2g + 1
    cost = np.full((T, H), INF)
    for a in range(T):
        for g in range(H):
            t = a + 2 * g + 1
            if t >= T:
                break
            if st[a] == 0:
                cost[a, g] = pair_cost(sp[si[a]], hw, ap[si[t]], p, 0.0)
            else:
                cost[a, g] = pair_cost(sp[si[t]], hw, ap[si[a]], p, 0.0)
    for h in range(1, H + 1):
        ln = 2 * h
        for a in range(T - ln + 1):
            e = a + ln - 1
            best = INF
            bt = -1
            for t in range(a + 1, e + 1, 2):
                v = cost[a, (t - a - 1) // 2] + P[a + 1, (t - a - 1) // 2] + P[t + 1, (e - t) // 2]
                if v < best:
                    best = v
                    bt = t
            P[a, h] = best
            ch[a, h] = bt
    F = np.full(T + 1, INF)
    fch = np.zeros(T + 1, np.int64)
    G = np.full(T + 1, INF)
    gch = np.full(T + 1, -1, np.int64)
    F[0] = 0.0
    for e in range(1, T + 1):
        for h in range(1, H + 1):
            ln = 2 * h
            if ln > e:
                break
            v = F[e - ln] + P[e - ln, h]
            if v < F[e]:
                F[e] = v
                fch[e] = h
            if odd == 1:
                v = G[e - ln] + P[e - ln, h]
                if v < G[e]:
                    G[e] = v
                    gch[e] = h
        if odd == 1 and (e - 1) % 2 == 0 and F[e - 1] < G[e]:
            G[e] = F[e - 1]
            gch[e] = 0
    final = G[T] if odd == 1 else F[T]
    if not np.isfinite(final):
        return False
    # unwind the top-level chain into interval blocks
    blocks_a = np.empty(T + 1, np.int64)
    blocks_h = np.empty(T + 1, np.int64)
    nb = 0
    e = T
    in_g = odd == 1
    while e > 0:
        if in_g:
            h = gch[e]
            if h == 0:
                in_g = False
                e -= 1
                continue
        else:
            h = fch[e]
        blocks_a[nb] = e - 2 * h
        blocks_h[nb] = h
        nb += 1
        e -= 2 * h
    stack_a = np.empty(T + 1, np.int64)
    stack_h = np.empty(T + 1, np.int64)
    top = 0
    for b in range(nb):
        stack_a[top] = blocks_a[b]
        stack_h[top] = blocks_h[b]
        top += 1
    while top > 0:
        top -= 1
        a = stack_a[top]
        h = stack_h[top]
        if h == 0:
            continue
        e = a + 2 * h - 1
        t = ch[a, h]
        if st[a] == 0:
            sigma[si[a]] = si[t]
        else:
            sigma[si[t]] = si[a]
        stack_a[top] = a + 1
        stack_h[top] = (t - a - 1) // 2
        top += 1
        stack_a[top] = t + 1
        stack_h[top] = (e - t) // 2
        top += 1
    return True


@njit(cache=True)
def warm_start(sp, hw, ap, units, p, band):
    """Level-decomposition assignment; returns ``(sigma, status)``, status 1 = infeasible."""
    M = sp.size
    N = ap.size
    tot = M + units.sum()
    lab = np.empty(tot, np.int64)
    typ = np.empty(tot, np.int8)
    idx = np.empty(tot, np.int64)
    i = 0
    j = 0
    w = 0
    t = 0
    while i < M or j < N:
        if j >= N or (i < M and sp[i] <= ap[j]):
            w -= 1
            lab[t] = w
            typ[t] = 0
            idx[t] = i
            t += 1
            i += 1
        else:
            for _ in range(units[j]):
                lab[t] = w
                typ[t] = 1
                idx[t] = j
                t += 1
                w += 1
            j += 1
    sigma = np.full(M, -1, np.int64)
    if tot == 0:
        return sigma, 0
    lo = lab.min()
    nl = lab.max() - lo + 1
    start = np.zeros(nl + 1, np.int64)
    for t in range(tot):
        start[lab[t] - lo + 1] += 1
    for k in range(nl):
        start[k + 1] += start[k]
    fill = start[:-1].copy()
    order = np.empty(tot, np.int64)
    for t in range(tot):
        k = lab[t] - lo
        order[fill[k]] = t
        fill[k] += 1
    for k in range(nl):
        a0 = start[k]
        a1 = start[k + 1]
        if a1 == a0:
            continue
        sel = order[a0:a1]
        if not _solve_level(typ[sel], idx[sel], sp, hw, ap, p, band, sigma):
            return sigma, 1
    return sigma, 0


# cycle canceling on the collapsed atom graph, with dual certificate


@njit(cache=True)
def _nbr(k, s, W, N, C):
    o = s - W if s < W else s - W + 1
    j = k + o
    if C > 0.0:
        j = j % N
        if j == k:
            return -1
        return j
    if j < 0 or j >= N:
        return -1
    return j


@njit(cache=True)
def _node_edges(k, W, N, sp, hw, ap, p, C, slots, off, units, wt, warg, wk):
    for s in range(2 * W):
        wt[k, s] = INF
        warg[k, s] = -1
    worst = -INF
    for r in range(off[k], off[k] + units[k]):
        i = slots[r]
        cik = pair_cost(sp[i], hw, ap[k], p, C)
        if cik > worst:
            worst = cik
        for s in range(2 * W):
            j = _nbr(k, s, W, N, C)
            if j < 0:
                continue
            v = pair_cost(sp[i], hw, ap[j], p, C) - cik
            if v < wt[k, s]:
                wt[k, s] = v
                warg[k, s] = i
    wk[k] = -worst


@njit(cache=True)
def _unused_edges(sp, hw, ap, p, C, sigma, wn, narg):
    M = sp.size
    N = ap.size
    prv = np.full(M, -1, np.int64)
    nxt = np.full(M, -1, np.int64)
    last = -1
    for i in range(M):
        if sigma[i] < 0:
            last = i
        prv[i] = last
    last = -1
    for i in range(M - 1, -1, -1):
        if sigma[i] < 0:
            last = i
        nxt[i] = last
    first_free = nxt[0] if M > 0 else -1
    last_free = prv[M - 1] if M > 0 else -1
    for j in range(N):
        wn[j] = INF
        narg[j] = -1
        if first_free < 0:
            continue
        pos = np.searchsorted(sp, ap[j])
        cand0 = prv[pos - 1] if pos > 0 else -1
        cand1 = nxt[pos] if pos < M else -1
        if C > 0.0:
            if cand0 < 0:
                cand0 = last_free
            if cand1 < 0:
                cand1 = first_free
        for c in (cand0, cand1):
            if c >= 0:
                v = pair_cost(sp[c], hw, ap[j], p, C)
                if v < wn[j]:
                    wn[j] = v
                    narg[j] = c


@njit(cache=True)
def _dual_check(sp, hw, ap, sigma, v, u, p, C, brute, thr, bad_k, bad_j):
    """Largest reduced-cost violation ``v_j - u_i - c_ij`` over all pairs.

    Far atoms are skipped only when ``(dist - hw)**p`` already exceeds the
    largest potential beyond them, which lower-bounds every skipped term.
    For each used unit whose worst violation exceeds ``thr`` the pair
    ``(sigma[i], j)`` is written to ``bad_k, bad_j``; returns ``(worst, count)``.
    """
    M = sp.size
    N = ap.size
    pre = np.empty(N)
    suf = np.empty(N)
    run = -INF
    for j in range(N):
        run = max(run, v[j])
        pre[j] = run
    run = -INF
    for j in range(N - 1, -1, -1):
        run = max(run, v[j])
        suf[j] = run
    gmax = pre[N - 1]
    worst = 0.0
    nbad = 0
    for i in range(M):
        s = sp[i]
        ui = u[i]
        wi = 0.0
        ji = -1
        if brute:
            for j in range(N):
                r = v[j] - ui - pair_cost(s, hw, ap[j], p, C)
                if r > wi:
                    wi = r
                    ji = j
        elif C > 0.0:
            c0 = np.searchsorted(ap, s)
            reach = (max(gmax - ui, 0.0)) ** (1.0 / p) + hw
            for step in range(N):
                j = (c0 + step) % N
                t = ap[j] - s
                t = t - C * math.floor(t / C + 0.5)
                if t >= 0.0 and t > reach:
                    break
                r = v[j] - ui - pair_cost(s, hw, ap[j], p, C)
                if r > wi:
                    wi = r
                    ji = j
            for step in range(1, N):
                j = (c0 - step) % N
                t = s - ap[j]
                t = t - C * math.floor(t / C + 0.5)
                if t >= 0.0 and t > reach:
                    break
                r = v[j] - ui - pair_cost(s, hw, ap[j], p, C)
                if r > wi:
                    wi = r
                    ji = j
        else:
            c0 = np.searchsorted(ap, s)
            for j in range(c0, N):
                d = ap[j] - s - hw
                if d > 0.0 and d**p > suf[j] - ui:
                    break
                r = v[j] - ui - pair_cost(s, hw, ap[j], p, C)
                if r > wi:
                    wi = r
                    ji = j
            for j in range(c0 - 1, -1, -1):
                d = s - ap[j] - hw
                if d > 0.0 and d**p > pre[j] - ui:
                    break
                r = v[j] - ui - pair_cost(s, hw, ap[j], p, C)
                if r > wi:
                    wi = r
                    ji = j
        if wi > worst:
            worst = wi
        if wi > thr and sigma[i] >= 0 and nbad < bad_k.size:
            bad_k[nbad] = sigma[i]
            bad_j[nbad] = ji
            nbad += 1
    return worst, nbad


@njit(cache=True)
def _pair_edge(k, j, sp, hw, ap, p, C, slots, off, units):
    best = INF
    bi = -1
    for r in range(off[k], off[k] + units[k]):
        i = slots[r]
        val = pair_cost(sp[i], hw, ap[j], p, C) - pair_cost(sp[i], hw, ap[k], p, C)
        if val < best:
            best = val
            bi = i
    return best, bi


@njit(cache=True)
def refine(sp, hw, ap, units, sigma, p, C, disposal, W0, brute, tol, max_cycles, max_rounds):
    """Cancel negative cycles until the assignment carries a dual certificate.

    Moves of a unit to atoms within ``W0`` ranks are always candidates; longer
    moves are added lazily whenever the exact dual check finds them violated.
    Returns ``(sigma, v, u, status, ncycles, maxviol, n_extra)``; status 0 =
    certified, 2 = cycle budget exhausted, 3 = round budget exhausted,
    4 = degenerate cycle, 5 = local moves only (``max_rounds < 0``, no check).
    """
    M = sp.size
    N = ap.size
    sigma = sigma.copy()
    off = np.zeros(N + 1, np.int64)
    for k in range(N):
        off[k + 1] = off[k] + units[k]
    slots = np.empty(off[N], np.int64)
    fill = off[:-1].copy()
    pos = np.full(M, -1, np.int64)
    for i in range(M):
        k = sigma[i]
        if k >= 0:
            slots[fill[k]] = i
            pos[i] = fill[k]
            fill[k] += 1
    V = N + 1 if disposal else N
    Wmax = max(1, N // 2) if C > 0.0 else max(1, N - 1)
    W = min(max(1, W0), Wmax)
    ncycles = 0
    v = np.zeros(N)
    u = np.zeros(M)
    maxviol = 0.0
    wt = np.empty((N, 2 * W))
    warg = np.empty((N, 2 * W), np.int64)
    wk = np.empty(N)
    wn = np.full(N, INF)
    narg = np.full(N, -1, np.int64)
    for k in range(N):
        _node_edges(k, W, N, sp, hw, ap, p, C, slots, off, units, wt, warg, wk)
    if disposal:
        _unused_edges(sp, hw, ap, p, C, sigma, wn, narg)
    cap = 64
    exf = np.empty(cap, np.int64)
    ext = np.empty(cap, np.int64)
    exw = np.empty(cap)
    exa = np.empty(cap, np.int64)
    ne = 0
    seen = dict()
    seen[np.int64(-1)] = np.int64(0)
    bad_k = np.empty(M, np.int64)
    bad_j = np.empty(M, np.int64)
    dist = np.zeros(V)
    pred = np.full(V, -1, np.int64)
    pslot = np.full(V, -1, np.int64)
    rounds = 0
    while True:
        last = -1
        for it in range(V + 1):
            last = -1
            for k in range(N):
                dk = dist[k]
                for s in range(2 * W):
                    w = wt[k, s]
                    if w == INF:
                        continue
                    j = _nbr(k, s, W, N, C)
                    if dk + w < dist[j] - tol:
                        dist[j] = dk + w
                        pred[j] = k
                        pslot[j] = s
                        last = j
                if disposal and dk + wk[k] < dist[N] - tol:
                    dist[N] = dk + wk[k]
                    pred[N] = k
                    pslot[N] = -3
                    last = N
            for e in range(ne):
                k = exf[e]
                j = ext[e]
                if dist[k] + exw[e] < dist[j] - tol:
                    dist[j] = dist[k] + exw[e]
                    pred[j] = k
                    pslot[j] = -4 - e
                    last = j
            if disposal:
                dN = dist[N]
                for j in range(N):
                    if dN + wn[j] < dist[j] - tol:
                        dist[j] = dN + wn[j]
                        pred[j] = N
                        pslot[j] = -2
                        last = j
            if last < 0:
                break
        if last >= 0:
            # negative cycle: walk back onto it
            x = last
            for _ in range(V):
                x = pred[x]
                if x < 0:
                    return sigma, v, u, 4, ncycles, maxviol, ne
            cyc = np.empty(V + 1, np.int64)
            nc = 0
            y = x
            while True:
                cyc[nc] = y
                nc += 1
                y = pred[y]
                if y == x or nc > V:
                    break
            if nc > V:
                return sigma, v, u, 4, ncycles, maxviol, ne
            weight = 0.0
            mv_unit = np.empty(nc, np.int64)
            mv_from = np.empty(nc, np.int64)
            mv_to = np.empty(nc, np.int64)
            for c in range(nc):
                to = cyc[c]
                fr = pred[to]
                s = pslot[to]
                mv_from[c] = fr
                mv_to[c] = to
                if s == -2:
                    weight += wn[to]
                    mv_unit[c] = narg[to]
                elif s == -3:
                    weight += wk[fr]
                    best = -INF
                    bi = -1
                    for r in range(off[fr], off[fr] + units[fr]):
                        cc = pair_cost(sp[slots[r]], hw, ap[fr], p, C)
                        if cc > best:
                            best = cc
                            bi = slots[r]
                    mv_unit[c] = bi
                elif s <= -4:
                    weight += exw[-4 - s]
                    mv_unit[c] = exa[-4 - s]
                else:
                    weight += wt[fr, s]
                    mv_unit[c] = warg[fr, s]
            if not weight < -tol:
                return sigma, v, u, 4, ncycles, maxviol, ne
            free_slot = np.full(V, -1, np.int64)
            for c in range(nc):
                if mv_from[c] < N:
                    free_slot[mv_from[c]] = pos[mv_unit[c]]
            for c in range(nc):
                i = mv_unit[c]
                to = mv_to[c]
                if to < N:
                    r = free_slot[to]
                    slots[r] = i
                    pos[i] = r
                    sigma[i] = to
                else:
                    sigma[i] = -1
                    pos[i] = -1
            ncycles += 1
            if ncycles > max_cycles:
                return sigma, v, u, 2, ncycles, maxviol, ne
            touched = np.zeros(V, np.bool_)
            for c in range(nc):
                touched[mv_from[c]] = True
                touched[mv_to[c]] = True
            for k in range(N):
                if touched[k]:
                    _node_edges(k, W, N, sp, hw, ap, p, C, slots, off, units, wt, warg, wk)
            for e in range(ne):
                if touched[exf[e]]:
                    exw[e], exa[e] = _pair_edge(exf[e], ext[e], sp, hw, ap, p, C, slots, off, units)
            if disposal and touched[N]:
                _unused_edges(sp, hw, ap, p, C, sigma, wn, narg)
            dist[:] = 0.0
            pred[:] = -1
            pslot[:] = -1
            continue
        # converged: potentials -> duals, then the exact check
        base = dist[N] if disposal else 0.0
        for j in range(N):
            v[j] = dist[j] - base
        maxviol = 0.0
        if max_rounds < 0:
            for i in range(M):
                k = sigma[i]
                u[i] = v[k] - pair_cost(sp[i], hw, ap[k], p, C) if k >= 0 else 0.0
            return sigma, v, u, 5, ncycles, np.nan, ne
        for i in range(M):
            k = sigma[i]
            if k >= 0:
                u[i] = v[k] - pair_cost(sp[i], hw, ap[k], p, C)
                if disposal and -u[i] > maxviol:
                    maxviol = -u[i]
            else:
                u[i] = 0.0
        worst, nbad = _dual_check(sp, hw, ap, sigma, v, u, p, C, brute, tol, bad_k, bad_j)
        maxviol = max(maxviol, worst)
        if maxviol <= 10.0 * tol:
            return sigma, v, u, 0, ncycles, maxviol, ne
        rounds += 1
        if rounds > max_rounds:
            return sigma, v, u, 3, ncycles, maxviol, ne
        added = 0
        for b in range(nbad):
            k = bad_k[b]
            j = bad_j[b]
            key = k * N + j
            if key in seen:
                continue
            seen[key] = np.int64(1)
            if ne == cap:
                cap *= 2
                exf2 = np.empty(cap, np.int64)
                ext2 = np.empty(cap, np.int64)
                exw2 = np.empty(cap)
                exa2 = np.empty(cap, np.int64)
                exf2[:ne] = exf[:ne]
                ext2[:ne] = ext[:ne]
                exw2[:ne] = exw[:ne]
                exa2[:ne] = exa[:ne]
                exf, ext, exw, exa = exf2, ext2, exw2, exa2
            exf[ne] = k
            ext[ne] = j
            exw[ne], exa[ne] = _pair_edge(k, j, sp, hw, ap, p, C, slots, off, units)
            ne += 1
            added += 1
        if added == 0:
            return sigma, v, u, 3, ncycles, maxviol, ne


@njit(cache=True)
def assignment_cost(sp, hw, ap, sigma, p, C):
    tot = 0.0
    for i in range(sp.size):
        k = sigma[i]
        if k >= 0:
            tot += pair_cost(sp[i], hw, ap[k], p, C)
    return tot
