"""Roots of piecewise-linear functions given their breakpoints.

All the balance equations in this package are integrals of step quantile
functions, hence piecewise linear in the unknown with kinks at known
cumulative weights.  Evaluating at the kinks and interpolating once gives the
root to rounding precision, which is what a long bisection would converge to.
"""

import numpy as np


def first_crossing(f, a, b, kinks, level=0.0):
    """Smallest v in [a, b] with f(v) <= level, for f >= level at a.

    ``f`` must be vectorized and linear between consecutive points of
    ``kinks`` (kinks outside (a, b) are ignored).  Returns None when f stays
    above ``level`` on the whole interval.
    """
    k = np.asarray(kinks, dtype=float)
    k = k[(k > a) & (k < b)]
    pts = np.unique(np.concatenate(([a], k, [b])))
    vals = np.asarray(f(pts), dtype=float) - level
    hit = np.flatnonzero(vals <= 0)
    if hit.size == 0:
        return None
    i = int(hit[0])
    if i == 0:
        return float(pts[0])
    p, q = pts[i - 1], pts[i]
    fp, fq = vals[i - 1], vals[i]
    if fp == fq:
        return float(q)
    t = p + (q - p) * fp / (fp - fq)
    return float(min(max(t, p), q))


def monotone_root(f, a, b, kinks, target, increasing=True):
    """Root of a monotone piecewise-linear f on [a, b] (clamped to the ends)."""
    if increasing:
        g = lambda v: target - np.asarray(f(v))  # noqa: E731  decreasing
    else:
        g = lambda v: np.asarray(f(v)) - target  # noqa: E731
    r = first_crossing(g, a, b, kinks)
    return b if r is None else r


def snap(v, grid, eps):
    """Move v onto the nearest grid point when closer than eps."""
    grid = np.asarray(grid)
    if grid.size == 0:
        return v
    i = int(np.argmin(np.abs(grid - v)))
    return float(grid[i]) if abs(grid[i] - v) <= eps else v
