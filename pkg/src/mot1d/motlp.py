"""Martingale optimal transport as a linear program on the full atom grid.

Variables pi_ij for every source atom x_i and target atom y_j.  Constraints:
row sums = mu, column sums = nu (last one dropped, it is implied), and one
martingale equality sum_j pi_ij (y_j - x_i) = 0 per source atom.  The
directional variant replaces column sums by three per-target constraints that
fix how much of nu({y_j}) is reached from above, from the diagonal, and from
below.
"""

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import simplex
from .errors import (BadParams, InfeasibleSplit, NotConvexOrdered, ParseError,
                     SolverFailure, SplitMismatch)
from .measures import DiscreteMeasure, fmt, scale_of
from .order import convex_order

ENTRY_FLOOR = 1e-12


class Coupling:
    """Sparse nonnegative measure on source x target atoms.

    Entries are kept sorted by (x, y).  ``source`` and ``target`` are the
    intended marginals; residuals measure how far the entries are from them.
    """

    __slots__ = ("source", "target", "x", "y", "mass")

    def __init__(self, source, target, x, y, mass):
        x = np.asarray(x, dtype=float).reshape(-1)
        y = np.asarray(y, dtype=float).reshape(-1)
        mass = np.asarray(mass, dtype=float).reshape(-1)
        if not (x.size == y.size == mass.size):
            raise BadParams("coupling arrays differ in length")
        if np.any(mass < 0):
            raise BadParams("negative coupling mass")
        order = np.lexsort((y, x))
        x, y, mass = x[order], y[order], mass[order]
        # merge duplicate cells
        if x.size > 1:
            new = np.ones(x.size, dtype=bool)
            new[1:] = (x[1:] != x[:-1]) | (y[1:] != y[:-1])
            if not np.all(new):
                grp = np.cumsum(new) - 1
                mass = np.bincount(grp, weights=mass)
                x, y = x[new], y[new]
        keep = mass > 0
        self.x, self.y, self.mass = x[keep], y[keep], mass[keep]
        for a in (self.x, self.y, self.mass):
            a.setflags(write=False)
        self.source = source if source is not None else self.first_marginal()
        self.target = target if target is not None else self.second_marginal()

    @classmethod
    def from_matrix(cls, source, target, P, floor=ENTRY_FLOOR):
        P = np.asarray(P, dtype=float)
        i, j = np.nonzero(P > floor)
        return cls(source, target, source.atoms[i], target.atoms[j], P[i, j])

    @classmethod
    def from_entries(cls, entries, source=None, target=None):
        if not entries:
            return cls(source, target, [], [], [])
        x, y, m = zip(*entries)
        return cls(source, target, x, y, m)

    def __len__(self):
        return self.mass.size

    def entries(self):
        return list(zip(self.x.tolist(), self.y.tolist(), self.mass.tolist()))

    def as_dict(self):
        return {(a, b): m for a, b, m in self.entries()}

    def first_marginal(self):
        return DiscreteMeasure.from_pairs(self.x, self.mass)

    def second_marginal(self):
        return DiscreteMeasure.from_pairs(self.y, self.mass)

    def to_matrix(self):
        P = np.zeros((len(self.source), len(self.target)))
        i = np.searchsorted(self.source.atoms, self.x)
        j = np.searchsorted(self.target.atoms, self.y)
        np.add.at(P, (i, j), self.mass)
        return P

    def scale(self):
        return scale_of(self.source, self.target)

    def residuals(self):
        """Absolute marginal residuals and the worst per-row martingale residual
        divided by the row weight."""
        src, tgt = self.source, self.target
        fm = self.first_marginal()
        sm = self.second_marginal()
        gx = np.union1d(src.atoms, fm.atoms)
        gy = np.union1d(tgt.atoms, sm.atoms)
        row = float(np.max(np.abs(fm.on_grid(gx) - src.on_grid(gx)), initial=0.0))
        col = float(np.max(np.abs(sm.on_grid(gy) - tgt.on_grid(gy)), initial=0.0))
        if self.mass.size:
            keys, inv = np.unique(self.x, return_inverse=True)
            drift = np.bincount(inv, weights=self.mass * (self.y - self.x))
            w = np.bincount(inv, weights=self.mass)
            mart = float(np.max(np.abs(drift) / w))
        else:
            mart = 0.0
        return {"row": row, "col": col, "martingale": mart}

    def is_martingale_coupling(self, tol=1e-9):
        r = self.residuals()
        sc = self.scale()
        return r["row"] <= tol * sc and r["col"] <= tol * sc and r["martingale"] <= tol * sc

    def scaled(self, c):
        return Coupling(self.source.scaled(c), self.target.scaled(c), self.x, self.y, self.mass * c)

    def __repr__(self):
        return f"Coupling({len(self)} entries)"

    # -- serialization --------------------------------------------------------

    def to_csv(self):
        buf = io.StringIO()
        buf.write("x,y,mass\n")
        for a, b, m in zip(self.x, self.y, self.mass):
            buf.write(f"{fmt(a)},{fmt(b)},{fmt(m)}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        rows = []
        for k, row in enumerate(csv.reader(io.StringIO(text))):
            if not row or not "".join(row).strip():
                continue
            if k == 0 and [c.strip() for c in row] == ["x", "y", "mass"]:
                continue
            if len(row) != 3:
                raise ParseError(f"expected 'x,y,mass', got {row!r}")
            try:
                rows.append(tuple(float(v) for v in row))
            except ValueError:
                raise ParseError(f"non-numeric row {row!r}") from None
        if any(r[2] < 0 for r in rows):
            raise ParseError("negative mass")
        return cls.from_entries(rows)

    def to_dict(self):
        return {
            "source": self.source.to_dict(),
            "target": self.target.to_dict(),
            "entries": [{"x": a, "y": b, "mass": m} for a, b, m in self.entries()],
            "residuals": self.residuals(),
        }

    @classmethod
    def from_dict(cls, d):
        try:
            src = DiscreteMeasure.from_dict(d["source"]) if "source" in d else None
            tgt = DiscreteMeasure.from_dict(d["target"]) if "target" in d else None
            ents = [(float(e["x"]), float(e["y"]), float(e["mass"])) for e in d["entries"]]
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"bad coupling object: {e}") from None
        if any(e[2] < 0 for e in ents):
            raise ParseError("negative mass")
        return cls.from_entries(ents, src, tgt)

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as e:
            raise ParseError(str(e)) from None


def identity_coupling(mu):
    return Coupling(mu, mu, mu.atoms, mu.atoms, mu.weights)


def product_coupling(mu, nu):
    X, Y = np.meshgrid(mu.atoms, nu.atoms, indexing="ij")
    return Coupling(mu, nu, X.ravel(), Y.ravel(), np.outer(mu.weights, nu.weights).ravel())


# -- costs ---------------------------------------------------------------------

@dataclass(frozen=True)
class CostSpec:
    """phi(|x - y|) with phi = d**rho or an increasing concave piecewise-linear table."""

    kind: str
    rho: float = None
    knots: tuple = None
    values: tuple = None

    @classmethod
    def power(cls, rho):
        if not (rho > 0 and np.isfinite(rho)):
            raise BadParams("rho must be finite and positive")
        return cls("power", rho=float(rho))

    @classmethod
    def table(cls, knots, values):
        k = np.asarray(knots, dtype=float)
        v = np.asarray(values, dtype=float)
        if k.size < 2 or k.size != v.size or k[0] != 0 or np.any(np.diff(k) <= 0):
            raise BadParams("table knots must start at 0 and increase")
        slopes = np.diff(v) / np.diff(k)
        if np.any(slopes <= 0) or np.any(np.diff(slopes) > 1e-12 * max(1.0, slopes.max())):
            raise BadParams("table must be increasing with nonincreasing slopes")
        return cls("table", knots=tuple(k.tolist()), values=tuple(v.tolist()))

    def __call__(self, d):
        d = np.abs(np.asarray(d, dtype=float))
        if self.kind == "power":
            return d ** self.rho
        k = np.asarray(self.knots)
        v = np.asarray(self.values)
        last = (v[-1] - v[-2]) / (k[-1] - k[-2])
        inside = np.interp(d, k, v)
        return np.where(d > k[-1], v[-1] + last * (d - k[-1]), inside)

    def describe(self):
        if self.kind == "power":
            return {"kind": "power", "rho": self.rho}
        return {"kind": "table", "knots": list(self.knots), "values": list(self.values)}


def coupling_cost(pi, cost):
    return float(np.sum(pi.mass * cost(pi.y - pi.x)))


def coupling_distance(p1, p2, norm="tv"):
    a, b = p1.as_dict(), p2.as_dict()
    diff = np.array([a.get(k, 0.0) - b.get(k, 0.0) for k in set(a) | set(b)])
    if diff.size == 0:
        return 0.0
    norm = norm.lower()
    if norm == "tv":
        return float(0.5 * np.sum(np.abs(diff)))
    if norm in ("frobenius", "fro"):
        return float(np.sqrt(np.sum(diff ** 2)))
    raise BadParams(f"unknown norm {norm!r}")


# -- solve ---------------------------------------------------------------------

@dataclass
class SolveReport:
    value: float
    coupling: Coupling
    sense: str
    cost: object
    iterations: int
    max_residual: float
    status: str = simplex.OPTIMAL
    lp_value: float = None
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "value": self.value,
            "sense": self.sense,
            "cost": self.cost.describe() if isinstance(self.cost, CostSpec) else "matrix",
            "iterations": self.iterations,
            "max_residual": self.max_residual,
            "status": self.status,
            "coupling": self.coupling.to_dict(),
        }


def _cost_matrix(mu, nu, cost):
    if isinstance(cost, CostSpec):
        return cost(nu.atoms[None, :] - mu.atoms[:, None])
    C = np.asarray(cost, dtype=float)
    if C.shape != (len(mu), len(nu)):
        raise BadParams("cost matrix shape does not match the atom grid")
    return C


def _base_rows(mu, nu):
    """Row-sum and martingale constraints as COO pieces over k = i*m + j."""
    n, m = len(mu), len(nu)
    ii = np.repeat(np.arange(n), m)
    jj = np.tile(np.arange(m), n)
    k = np.arange(n * m)
    rows = [ii, n + ii]
    cols = [k, k]
    vals = [np.ones(n * m), nu.atoms[jj] - mu.atoms[ii]]
    rhs = [mu.weights, np.zeros(n)]
    return rows, cols, vals, rhs, 2 * n, ii, jj


def build_lp(mu, nu, C):
    n, m = len(mu), len(nu)
    rows, cols, vals, rhs, r0, ii, jj = _base_rows(mu, nu)
    keep = jj < m - 1  # last column-sum constraint is implied
    k = np.arange(n * m)
    rows.append(r0 + jj[keep])
    cols.append(k[keep])
    vals.append(np.ones(int(keep.sum())))
    rhs.append(nu.weights[:-1])
    A = sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(r0 + m - 1, n * m))
    return simplex.LinearProgram(C.ravel(), A, np.concatenate(rhs))


def _report(mu, nu, sol, C, cost, sense):
    P = sol.primal.reshape(len(mu), len(nu))
    pi = Coupling.from_matrix(mu, nu, P)
    i = np.searchsorted(mu.atoms, pi.x)
    j = np.searchsorted(nu.atoms, pi.y)
    value = float(np.sum(pi.mass * C[i, j]))
    return SolveReport(value, pi, sense, cost, sol.iterations, sol.max_residual,
                       sol.status, sol.value)


def _same_measure(mu, nu):
    return (len(mu) == len(nu) and np.array_equal(mu.atoms, nu.atoms)
            and np.allclose(mu.weights, nu.weights, rtol=0.0, atol=1e-15))


def solve_mot(mu, nu, cost, sense="max", feas_tol=1e-9, opt_tol=1e-9, check_order=True):
    """Optimal martingale coupling of (mu, nu) for ``cost`` (CostSpec or n x m matrix)."""
    sense = sense.lower()
    if check_order:
        rep = convex_order(mu, nu, tol=max(feas_tol, 1e-9))
        if not rep.holds:
            raise NotConvexOrdered(f"worst potential gap {rep.worst_gap!r} at {rep.witness!r}")
    C = _cost_matrix(mu, nu, cost)
    if _same_measure(mu, nu):
        # the identity is the only martingale coupling; the LP would be one
        # maximally degenerate vertex
        pi = Coupling.from_matrix(mu, nu, np.diag(mu.weights))
        value = float(np.sum(mu.weights * np.diag(C)))
        return SolveReport(value, pi, sense, cost, 0, 0.0, simplex.OPTIMAL, value)
    lp = build_lp(mu, nu, C)
    sol = simplex.solve(lp, sense, feas_tol, opt_tol)
    if sol.status == simplex.INFEASIBLE:
        raise NotConvexOrdered("no martingale coupling exists (phase 1 infeasible)")
    if sol.status != simplex.OPTIMAL:
        raise SolverFailure(f"LP status {sol.status}")
    return _report(mu, nu, sol, C, cost, sense)


def mot_feasible(mu, nu, feas_tol=1e-9):
    """Phase-1 decision of whether a martingale coupling exists."""
    C = np.zeros((len(mu), len(nu)))
    sol = simplex.solve(build_lp(mu, nu, C), "min", feas_tol, 1e-9)
    return sol.status == simplex.OPTIMAL


def check_split(nu, split, tol=1e-9):
    parts = (split.nu_l, split.nu_0, split.nu_r)
    grid = np.union1d(nu.atoms, np.concatenate([p.atoms for p in parts]))
    total = sum(p.on_grid(grid) for p in parts)
    err = float(np.max(np.abs(total - nu.on_grid(grid)), initial=0.0))
    if err > tol:
        raise SplitMismatch(f"nu_l + nu_0 + nu_r differs from nu by {err!r}")


def solve_mot_directional(mu, nu, split, cost, sense="max", feas_tol=1e-9, opt_tol=1e-9):
    """Optimize over martingale couplings whose directional parts equal ``split``."""
    sense = sense.lower()
    check_split(nu, split, tol=max(feas_tol, 1e-9))
    n, m = len(mu), len(nu)
    C = _cost_matrix(mu, nu, cost)
    rows, cols, vals, rhs, r0, ii, jj = _base_rows(mu, nu)
    k = np.arange(n * m)
    X = mu.atoms[ii]
    Y = nu.atoms[jj]
    r = r0
    groups = ((Y < X, split.nu_l), (Y == X, split.nu_0), (Y > X, split.nu_r))
    for mask, part in groups:
        target = part.on_grid(nu.atoms)
        for j in range(m):
            sel = mask & (jj == j)
            if not np.any(sel):
                if target[j] > feas_tol:
                    raise InfeasibleSplit(f"no source atom can reach {nu.atoms[j]!r} in this direction")
                continue
            rows.append(np.full(int(sel.sum()), r))
            cols.append(k[sel])
            vals.append(np.ones(int(sel.sum())))
            rhs.append([target[j]])
            r += 1
    A = sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(r, n * m))
    lp = simplex.LinearProgram(C.ravel(), A, np.concatenate([np.ravel(v) for v in rhs]))
    sol = simplex.solve(lp, sense, feas_tol, opt_tol)
    if sol.status == simplex.INFEASIBLE:
        raise InfeasibleSplit("no martingale coupling realizes this split")
    if sol.status != simplex.OPTIMAL:
        raise SolverFailure(f"LP status {sol.status}")
    return _report(mu, nu, sol, C, cost, sense)
