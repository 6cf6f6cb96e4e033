"""One-dimensional search helpers: golden section and grid-plus-refine."""

from __future__ import annotations

import math

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f, a, b, tol=1e-10, max_iter=200):
    """Maximize a unimodal scalar function on ``[a, b]``.

    Returns ``(x, f(x))`` for the best point evaluated, endpoints included.
    """
    a, b = float(min(a, b)), float(max(a, b))
    fa, fb = f(a), f(b)
    best_x, best_f = (a, fa) if fa >= fb else (b, fb)
    if b - a <= tol:
        return best_x, best_f
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    for x, fx in ((c, fc), (d, fd)):
        if fx > best_f:
            best_x, best_f = x, fx
    return best_x, best_f


def grid_max(f, lo, hi, n, tol=None):
    """Maximize a vectorized function on ``n`` equispaced points, then refine.

    The refinement is a golden-section search over the two grid cells
    adjacent to the discrete argmax.  Returns ``(x, f(x), grid, values)``.
    """
    grid = np.linspace(lo, hi, int(n))
    vals = np.asarray(f(grid), dtype=float)
    i = int(np.argmax(vals))
    x_best, f_best = float(grid[i]), float(vals[i])
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    if tol is None:
        tol = 1e-12 * max(1.0, abs(hi - lo))
    x, fx = golden_section_max(lambda x: float(f(np.array([x]))[0]), a, b, tol=tol)
    if fx > f_best:
        x_best, f_best = x, fx
    return x_best, f_best, grid, vals
