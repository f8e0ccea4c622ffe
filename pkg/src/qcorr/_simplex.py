"""Nelder-Mead over a batch of independent problems advanced in lockstep.

Every problem keeps its own simplex; objective calls are batched across all
problems still running, which is what makes thousands of small
optimizations affordable in pure numpy. Iteration order is fixed, so results
are bitwise reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

REFLECT, EXPAND, CONTRACT, SHRINK = 1.0, 2.0, 0.5, 0.5


@dataclass
class BatchResult:
    x: np.ndarray          # (P, n) best vertex per problem
    fun: np.ndarray        # (P,)
    converged: np.ndarray  # (P,) bool
    iterations: np.ndarray  # (P,) int


def minimize_batch(f, x0, step, xatol: float = 1e-9, maxiter: int = 2000) -> BatchResult:
    """Minimize P problems at once.

    ``f(x, idx)`` evaluates rows ``x`` (B, n) belonging to problems ``idx``
    (B,) and returns (B,) values. ``step`` is the initial simplex edge, a
    scalar or a per-coordinate (n,) array. A problem stops once the largest
    coordinate distance from its best vertex to any other vertex is at most
    ``xatol``.
    """
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    p, n = x0.shape
    step = np.broadcast_to(np.asarray(step, dtype=float), (n,))
    sim = np.repeat(x0[:, None, :], n + 1, axis=1)
    for j in range(n):
        sim[:, j + 1, j] += step[j]
    all_idx = np.arange(p)
    fs = f(sim.reshape(-1, n), np.repeat(all_idx, n + 1)).reshape(p, n + 1)

    active = np.ones(p, dtype=bool)
    converged = np.zeros(p, dtype=bool)
    iters = np.zeros(p, dtype=int)

    for _ in range(maxiter):
        order = np.argsort(fs, axis=1, kind="stable")
        fs = np.take_along_axis(fs, order, axis=1)
        sim = np.take_along_axis(sim, order[:, :, None], axis=1)

        diam = np.max(np.abs(sim[:, 1:, :] - sim[:, :1, :]), axis=(1, 2))
        done = active & (diam <= xatol)
        converged |= done
        active &= ~done
        a = np.flatnonzero(active)
        if a.size == 0:
            break
        iters[a] += 1

        s_a, f_a = sim[a], fs[a]
        centroid = s_a[:, :-1, :].mean(axis=1)
        worst = s_a[:, -1, :]
        xr = centroid + REFLECT * (centroid - worst)
        fr = f(xr, a)

        new_x = np.empty_like(xr)
        new_f = np.empty_like(fr)
        shrink = np.zeros(a.size, dtype=bool)

        # expansion
        m = fr < f_a[:, 0]
        if m.any():
            xe = centroid[m] + EXPAND * (xr[m] - centroid[m])
            fe = f(xe, a[m])
            take_e = fe < fr[m]
            new_x[m] = np.where(take_e[:, None], xe, xr[m])
            new_f[m] = np.where(take_e, fe, fr[m])
        # plain reflection
        m = (fr >= f_a[:, 0]) & (fr < f_a[:, -2])
        new_x[m], new_f[m] = xr[m], fr[m]
        # outside contraction
        m = (fr >= f_a[:, -2]) & (fr < f_a[:, -1])
        if m.any():
            xc = centroid[m] + CONTRACT * (xr[m] - centroid[m])
            fc = f(xc, a[m])
            ok = fc <= fr[m]
            new_x[m], new_f[m] = xc, fc
            shrink[np.flatnonzero(m)[~ok]] = True
        # inside contraction
        m = fr >= f_a[:, -1]
        if m.any():
            xcc = centroid[m] + CONTRACT * (worst[m] - centroid[m])
            fcc = f(xcc, a[m])
            ok = fcc < f_a[m, -1]
            new_x[m], new_f[m] = xcc, fcc
            shrink[np.flatnonzero(m)[~ok]] = True

        keep = ~shrink
        rows = a[keep]
        sim[rows, -1, :] = new_x[keep]
        fs[rows, -1] = new_f[keep]

        if shrink.any():
            rows = a[shrink]
            best = sim[rows, :1, :]
            sim[rows, 1:, :] = best + SHRINK * (sim[rows, 1:, :] - best)
            pts = sim[rows, 1:, :].reshape(-1, n)
            fs[rows, 1:] = f(pts, np.repeat(rows, n)).reshape(rows.size, n)

    order = np.argsort(fs, axis=1, kind="stable")
    fs = np.take_along_axis(fs, order, axis=1)
    sim = np.take_along_axis(sim, order[:, :, None], axis=1)
    diam = np.max(np.abs(sim[:, 1:, :] - sim[:, :1, :]), axis=(1, 2))
    converged |= diam <= xatol
    return BatchResult(sim[:, 0].copy(), fs[:, 0].copy(), converged, iters)
