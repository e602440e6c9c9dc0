"""Convex order, stochastic order and the convex-order join.

Both potentials are piecewise linear with knots at atoms, so comparing them on
the union of atoms decides the convex order exactly (given equal means and
masses).
"""

from dataclasses import dataclass

import numpy as np

from .errors import MeanMismatch
from .measures import DiscreteMeasure, scale_of


@dataclass(frozen=True)
class OrderReport:
    holds: bool
    worst_gap: float
    witness: float
    mean_gap: float = 0.0

    def to_dict(self):
        return {"holds": self.holds, "worst_gap": self.worst_gap,
                "witness": self.witness, "mean_gap": self.mean_gap}


def convex_order(mu, nu, tol=1e-9):
    """Is mu <=cx nu?  worst_gap = min over the atom union of u_nu - u_mu."""
    sc = scale_of(mu, nu)
    grid = np.union1d(mu.atoms, nu.atoms)
    gap = nu.potential(grid) - mu.potential(grid)
    k = int(np.argmin(gap))
    worst = float(gap[k])
    mean_gap = float(nu._pref[-1] - mu._pref[-1])
    mass_ok = abs(mu.mass - nu.mass) <= tol
    holds = worst >= -tol * sc and abs(mean_gap) <= tol * sc and mass_ok
    return OrderReport(holds, worst, float(grid[k]), mean_gap)


def stochastic_order(mu, nu, tol=1e-9):
    """Is mu <=st nu, i.e. F_mu >= F_nu everywhere?"""
    grid = np.union1d(mu.atoms, nu.atoms)
    gap = mu.cdf(grid) - nu.cdf(grid)
    k = int(np.argmin(gap))
    worst = float(gap[k])
    return OrderReport(worst >= -tol, worst, float(grid[k]))


def convex_join(mu, nu, mean_tol=1e-9):
    """Measure whose potential is max(u_mu, u_nu).

    On each interval between consecutive knots one of the two potentials is
    the larger; its slope there is 2F - 1 in closed form, so atom masses are
    differences of CDF values rather than differences of slopes computed from
    potential values.  Crossings inside an interval are added as knots, and
    snapped to a neighbouring knot when closer than 1e-12 * span.
    """
    sc = scale_of(mu, nu)
    if abs(mu.mean() - nu.mean()) > mean_tol * sc:
        raise MeanMismatch(f"means {mu.mean()!r} and {nu.mean()!r} differ")
    knots = np.union1d(mu.atoms, nu.atoms)
    span = float(knots[-1] - knots[0]) if knots.size > 1 else 0.0
    snap = 1e-12 * span
    d = nu.potential(knots) - mu.potential(knots)  # >0 where nu is on top

    # build refined knot list with the owner of each following interval
    pts = [float(knots[0])]
    owner = []  # owner[i] in {0: mu, 1: nu} for interval (pts[i], pts[i+1])
    for i in range(knots.size - 1):
        a, b = float(knots[i]), float(knots[i + 1])
        da, db = d[i], d[i + 1]
        if da * db < 0:
            t = a + (b - a) * da / (da - db)
            if t - a <= snap or b - t <= snap:
                owner.append(1 if da + db > 0 else 0)
            else:
                owner.append(1 if da > 0 else 0)
                pts.append(t)
                owner.append(1 if db > 0 else 0)
        else:
            owner.append(1 if da + db >= 0 else 0)
        pts.append(b)
    pts = np.array(pts)
    ms = (mu, nu)
    # F of the owner on each side of every knot; outside the hull both are 0 / 1
    xs, ws = [], []
    for k, t in enumerate(pts):
        left = 0.0 if k == 0 else ms[owner[k - 1]].cdf_left(t)
        right = 1.0 if k == len(pts) - 1 else ms[owner[k]].cdf(t)
        if k > 0 and k < len(pts) - 1 and owner[k - 1] == owner[k]:
            w = ms[owner[k]].atom_weight(t)
        elif k == 0:
            w = ms[owner[0]].cdf(t) if owner else 1.0
        elif k == len(pts) - 1:
            w = 1.0 - ms[owner[-1]].cdf_left(t)
        else:
            w = right - left
        xs.append(t)
        ws.append(w)
    if len(pts) == 1:
        ws = [1.0]
    xs = np.array(xs)
    ws = np.array(ws)
    return _drop_small(xs, ws, 1e-14)


def _drop_small(xs, ws, eps):
    """Remove atoms lighter than ``eps`` and hand their mass to the two neighbours
    in the proportions that keep the mean."""
    xs = list(xs)
    ws = list(ws)
    i = 0
    while i < len(xs):
        if ws[i] >= eps or len(xs) == 1:
            i += 1
            continue
        m, t = ws[i], xs[i]
        if i == 0 or i == len(xs) - 1:
            j = 1 if i == 0 else len(xs) - 2
            # no neighbour on one side: a move to the single neighbour would
            # shift the mean by m*|dx|, which is below eps*span, so accept it
            ws[j] += max(m, 0.0)
        else:
            a, b = xs[i - 1], xs[i + 1]
            lam = (b - t) / (b - a)
            ws[i - 1] += max(m, 0.0) * lam
            ws[i + 1] += max(m, 0.0) * (1 - lam)
        del xs[i], ws[i]
        i = max(i - 1, 0)
    return DiscreteMeasure(np.array(xs), np.array(ws))
