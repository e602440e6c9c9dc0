"""Two-phase revised simplex for small dense-ish equality-form LPs.

    min / max  c.x   s.t.  A x = b,  x >= 0

The basis inverse is kept explicitly and updated by product-form pivots, with a
fresh inversion every ``REFACTOR_EVERY`` pivots (that is also where the basis
condition number is estimated).  Pricing is Dantzig's rule over a sparse copy
of A; after 3 (m + n) consecutive degenerate pivots the solver switches to
Bland's rule, which rules out cycling, and switches back at the next pivot
that moves the objective.  Rows that are linear combinations of others are
found at the end of phase 1: their artificial variable cannot be pivoted out
because the corresponding row of B^-1 A vanishes, and the row is dropped.

``exact=True`` runs an independent dense tableau in rational arithmetic
(``fractions.Fraction``) with Bland's rule.  It is slow and meant as a test
oracle for problems with a dozen variables.
"""

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .errors import BadParams, NumericalBreakdown

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
UNBOUNDED = "Unbounded"

REFACTOR_EVERY = 64
HARRIS = 1e-12
COND_LIMIT = 1e14
PIVOT_TOL = 1e-9


@dataclass
class LinearProgram:
    c: np.ndarray
    A: object  # dense ndarray or scipy sparse matrix
    b: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        if not sp.issparse(self.A):
            self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        m, n = self.A.shape
        if self.c.size != n or self.b.size != m:
            raise BadParams(f"inconsistent LP shapes: A {m}x{n}, c {self.c.size}, b {self.b.size}")
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.b))):
            raise BadParams("non-finite LP data")

    @property
    def shape(self):
        return self.A.shape


@dataclass
class LpSolution:
    status: str
    value: float
    primal: np.ndarray
    duals: np.ndarray
    iterations: int
    max_residual: float
    dropped_rows: tuple = ()
    exact_value: object = None
    exact_primal: object = field(default=None, repr=False)

    @property
    def optimal(self):
        return self.status == OPTIMAL


def solve(lp, sense="min", feas_tol=1e-9, opt_tol=1e-9, exact=False, max_iter=None):
    sense = sense.lower()
    if sense not in ("min", "max"):
        raise BadParams(f"sense must be min or max, not {sense!r}")
    if exact:
        return _solve_exact(lp, sense)
    return _RevisedSimplex(lp, sense, feas_tol, opt_tol, max_iter).run()


class _RevisedSimplex:
    def __init__(self, lp, sense, feas_tol, opt_tol, max_iter):
        A = sp.csc_matrix(lp.A, dtype=float)
        b = lp.b.copy()
        self.flip = np.where(b < 0, -1.0, 1.0)
        A = sp.diags(self.flip) @ A
        self.A = sp.csc_matrix(A)
        self.AT = sp.csr_matrix(self.A.T)
        self.b = b * self.flip
        self.m, self.n = self.A.shape
        self.sign = 1.0 if sense == "min" else -1.0
        self.c = lp.c * self.sign
        self.feas_tol = feas_tol
        self.opt_tol = opt_tol
        self.lp = lp
        self.max_iter = max_iter or max(10_000, 50 * (self.m + self.n))
        self.iterations = 0
        self.degenerate = 0
        self.bland = False
        self.bland_after = 3 * (self.m + self.n)
        # columns n .. n+m-1 are artificials (identity)
        self.basis = np.arange(self.n, self.n + self.m)
        self.Binv = np.eye(self.m)
        self.xB = self.b.copy()
        self.since_refactor = 0
        self.redundant = np.zeros(self.m, dtype=bool)
        self._Adense_cols = {}

    # -- linear algebra helpers ---------------------------------------------

    def _column(self, j):
        if j >= self.n:
            e = np.zeros(self.m)
            e[j - self.n] = 1.0
            return e
        lo, hi = self.A.indptr[j], self.A.indptr[j + 1]
        col = np.zeros(self.m)
        col[self.A.indices[lo:hi]] = self.A.data[lo:hi]
        return col

    def _ftran(self, j):
        if j >= self.n:
            return self.Binv[:, j - self.n].copy()
        lo, hi = self.A.indptr[j], self.A.indptr[j + 1]
        rows = self.A.indices[lo:hi]
        return self.Binv[:, rows] @ self.A.data[lo:hi]

    def _refactor(self):
        B = np.column_stack([self._column(j) for j in self.basis])
        try:
            Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            raise NumericalBreakdown("singular basis on refactorization") from None
        cond = np.linalg.norm(B, 1) * np.linalg.norm(Binv, 1)
        if not np.isfinite(cond) or cond > COND_LIMIT:
            raise NumericalBreakdown(f"basis condition estimate {cond:.3e} exceeds {COND_LIMIT:.0e}")
        self.Binv = Binv
        self.xB = Binv @ self.b
        self.since_refactor = 0

    def _pivot(self, r, q, alpha):
        piv = alpha[r]
        row = self.Binv[r] / piv
        alpha = alpha.copy()
        alpha[r] = 0.0
        self.Binv -= np.outer(alpha, row)
        self.Binv[r] = row
        self.basis[r] = q
        self.since_refactor += 1
        self.iterations += 1
        if self.since_refactor >= REFACTOR_EVERY:
            self._refactor()

    # -- one phase ----------------------------------------------------------

    def _phase(self, cost, allow_art):
        """Iterate to optimality for ``cost`` (length n + m).  Returns status."""
        m, n = self.m, self.n
        is_basic = np.zeros(n + m, dtype=bool)
        dscale = 1.0 + np.abs(cost)
        dtol = self.opt_tol
        while True:
            if self.iterations >= self.max_iter:
                return "IterationLimit"
            is_basic[:] = False
            is_basic[self.basis] = True
            y = cost[self.basis] @ self.Binv
            d = np.empty(n + m)
            d[:n] = cost[:n] - self.AT @ y
            d[n:] = cost[n:] - y
            d[is_basic] = 0.0
            if not allow_art:
                d[n:] = 0.0
            d = d / dscale
            if self.bland:
                cand = np.flatnonzero(d < -dtol)
                if cand.size == 0:
                    return OPTIMAL
                q = int(cand[0])
            else:
                q = int(np.argmin(d))
                if d[q] >= -dtol:
                    return OPTIMAL
            alpha = self._ftran(q)
            r = self._ratio(alpha)
            if r is None:
                return UNBOUNDED
            theta = max(self.xB[r] / alpha[r], 0.0)
            if theta * max(1.0, np.max(np.abs(alpha))) <= 1e-14:
                self.degenerate += 1
                if not self.bland and self.degenerate > self.bland_after:
                    self.bland = True
            else:
                # progress made: the objective moved, so no cycle can span this pivot
                self.degenerate = 0
                self.bland = False
            self.xB -= theta * alpha
            self.xB[r] = theta
            self._pivot(r, q, alpha)

    def _ratio(self, alpha):
        pos = alpha > PIVOT_TOL
        pos &= ~self.redundant
        if not np.any(pos):
            return None
        idx = np.flatnonzero(pos)
        a = alpha[idx]
        x = np.maximum(self.xB[idx], 0.0)
        if self.bland:
            ratios = x / a
            best = ratios.min()
            tied = ratios <= best + 1e-15 * max(1.0, best)
            # drop pivots that are tiny next to the best tied one
            tied &= a >= 1e-6 * a[tied].max()
            ties = idx[tied]
            # smallest variable index among tied rows
            return int(ties[np.argmin(self.basis[ties])])
        # Harris two-pass: relax by feas_tol, then take the largest pivot
        theta_max = np.min((x + HARRIS) / a)
        ok = x / a <= theta_max
        return int(idx[ok][np.argmax(a[ok])])

    def _drive_out_artificials(self):
        for r in range(self.m):
            if self.basis[r] < self.n:
                continue
            row = self.A.T @ self.Binv[r]  # row r of B^-1 A over structurals
            basic = np.zeros(self.n, dtype=bool)
            sb = self.basis[self.basis < self.n]
            basic[sb] = True
            row[basic] = 0.0
            j = int(np.argmax(np.abs(row)))
            if abs(row[j]) > 1e-7:
                alpha = self._ftran(j)
                theta = self.xB[r] / alpha[r]
                self.xB -= theta * alpha
                self.xB[r] = theta
                self._pivot(r, j, alpha)
            else:
                self.redundant[r] = True

    # -- driver -------------------------------------------------------------

    def run(self):
        m, n = self.m, self.n
        cost1 = np.concatenate((np.zeros(n), np.ones(m)))
        st = self._phase(cost1, allow_art=True)
        if st == "IterationLimit":
            raise NumericalBreakdown("iteration limit reached in phase 1")
        self._refactor()
        infeas = float(np.sum(self.xB[self.basis >= n]))
        btol = self.feas_tol * (1.0 + float(np.max(np.abs(self.b))) if m else 1.0)
        if infeas > btol:
            return self._result(INFEASIBLE)
        self._drive_out_artificials()
        self._refactor()
        cost2 = np.concatenate((self.c, np.zeros(m)))
        st = self._phase(cost2, allow_art=False)
        if st == "IterationLimit":
            raise NumericalBreakdown("iteration limit reached in phase 2")
        self._refactor()
        return self._result(st, cost2)

    def _result(self, status, cost=None):
        x = np.zeros(self.n)
        structural = self.basis < self.n
        x[self.basis[structural]] = self.xB[structural]
        x[(x < 0) & (x >= -self.feas_tol * 10)] = 0.0
        if cost is None:
            y = np.zeros(self.m)
        else:
            y = (cost[self.basis] @ self.Binv) * self.sign * self.flip
        A0 = self.lp.A
        resid = A0 @ x - self.lp.b
        max_res = float(np.max(np.abs(resid))) if self.m else 0.0
        value = float(self.lp.c @ x) if status == OPTIMAL else float("nan")
        dropped = tuple(int(i) for i in np.flatnonzero(self.redundant))
        return LpSolution(status, value, x, y, self.iterations, max_res, dropped)


# -- exact rational oracle --------------------------------------------------

def _solve_exact(lp, sense):
    A = lp.A.toarray() if sp.issparse(lp.A) else np.asarray(lp.A)
    m, n = A.shape
    F = Fraction
    rows = []
    flips = []
    for i in range(m):
        bi = F(float(lp.b[i]))
        s = -1 if bi < 0 else 1
        flips.append(s)
        rows.append([F(float(a)) * s for a in A[i]] + [F(int(i == k)) for k in range(m)] + [bi * s])
    sgn = 1 if sense == "min" else -1
    c = [F(float(v)) * sgn for v in lp.c]
    basis = list(range(n, n + m))
    iters = 0

    def pivot(r, q):
        nonlocal iters
        pr = rows[r]
        pv = pr[q]
        rows[r] = [v / pv for v in pr]
        for i in range(len(rows)):
            if i != r and rows[i][q] != 0:
                f = rows[i][q]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        basis[r] = q
        iters += 1

    def run(cost, allowed):
        while True:
            red = []
            for j in range(n + m):
                if not allowed(j) or j in basis:
                    red.append(F(0))
                    continue
                red.append(cost[j] - sum(cost[basis[i]] * rows[i][j] for i in range(len(rows))))
            q = next((j for j in range(n + m) if red[j] < 0), None)
            if q is None:
                return OPTIMAL
            best = None
            for i in range(len(rows)):
                if rows[i][q] > 0:
                    ratio = rows[i][-1] / rows[i][q]
                    if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                        best = (ratio, i)
            if best is None:
                return UNBOUNDED
            pivot(best[1], q)

    cost1 = [F(0)] * n + [F(1)] * m
    run(cost1, lambda j: True)
    if sum(rows[i][-1] for i in range(len(rows)) if basis[i] >= n) > 0:
        return LpSolution(INFEASIBLE, float("nan"), np.zeros(n), np.zeros(m), iters, float("nan"))
    dropped = []
    for r in range(len(rows)):
        if basis[r] >= n:
            j = next((j for j in range(n) if rows[r][j] != 0 and j not in basis), None)
            if j is not None:
                pivot(r, j)
            else:
                dropped.append(r)
    cost2 = c + [F(0)] * m
    st = run(cost2, lambda j: j < n)
    x = [F(0)] * n
    for i, j in enumerate(basis):
        if j < n:
            x[j] = rows[i][-1]
    y = []
    for k in range(m):
        y.append(sum(cost2[basis[i]] * rows[i][n + k] for i in range(len(rows))) * sgn * flips[k])
    val = sum(ci * xi for ci, xi in zip([F(float(v)) for v in lp.c], x))
    xf = np.array([float(v) for v in x])
    resid = A @ xf - lp.b
    return LpSolution(st, float(val) if st == OPTIMAL else float("nan"), xf,
                      np.array([float(v) for v in y]), iters,
                      float(np.max(np.abs(resid))) if m else 0.0, tuple(dropped),
                      exact_value=val if st == OPTIMAL else None, exact_primal=x)
