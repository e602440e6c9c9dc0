"""Direct constructions of monotone martingale couplings and their checks.

The constructors sweep the source atoms from left to right and, for each one,
consume a slice of the quantile function of the part of nu reached from above
(nu_l) and a slice of the part reached from below (nu_r), sized so that the
row has the right mass and barycenter.  The checkers read monotonicity off the
finite support.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import measures as M
from .errors import (CrossCheckFailure, Degenerate, EqualMeasures, InfeasibleSplit,
                     NegativeReducedMeasure, NoNestedSupports, NotConvexOrdered,
                     ParseError, SplitMismatch)
from .measures import DiscreteMeasure, scale_of
from .motlp import (ENTRY_FLOOR, Coupling, CostSpec, check_split,
                    coupling_distance, identity_coupling, product_coupling,
                    solve_mot)
from .order import convex_order
from .plroot import first_crossing, snap

SNAP = 1e-13


@dataclass(frozen=True)
class DirectionalSplit:
    nu_l: DiscreteMeasure
    nu_0: DiscreteMeasure
    nu_r: DiscreteMeasure

    def total(self):
        return M.add(M.add(self.nu_l, self.nu_0), self.nu_r)

    def to_dict(self):
        return {"nu_l": self.nu_l.to_dict(), "nu_0": self.nu_0.to_dict(), "nu_r": self.nu_r.to_dict()}

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(*(DiscreteMeasure.from_dict(d[k]) for k in ("nu_l", "nu_0", "nu_r")))
        except KeyError as e:
            raise ParseError(f"split is missing {e}") from None

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as e:
            raise ParseError(str(e)) from None


def decompose(pi):
    """Split the target mass of ``pi`` by the sign of y - x."""
    parts = []
    for mask in (pi.y < pi.x, pi.y == pi.x, pi.y > pi.x):
        parts.append(DiscreteMeasure.from_pairs(pi.y[mask], pi.mass[mask]))
    return DirectionalSplit(*parts)


# -- monotonicity checkers -------------------------------------------------------

@dataclass(frozen=True)
class MonotoneVerdict:
    ok: bool
    condition: str = None
    witness: tuple = None  # ((x_-, y_1), (x_+, y_2)) with x_- < x_+

    def __bool__(self):
        return self.ok

    def to_dict(self):
        return {"ok": self.ok, "condition": self.condition,
                "witness": None if self.witness is None else [list(p) for p in self.witness]}


def _scan(xs, ys, want_increasing):
    """Look for x_p < x_q whose destinations break the required order.

    want_increasing: destinations must be nondecreasing in x (a, b);
    otherwise nonincreasing (c, d).  Returns a witness pair or None.
    """
    if xs.size < 2:
        return None
    order = np.lexsort((ys, xs))
    xs, ys = xs[order], ys[order]
    starts = np.flatnonzero(np.concatenate(([True], xs[1:] != xs[:-1])))
    ends = np.concatenate((starts[1:], [xs.size]))
    best = None  # (value, index) extreme destination over strictly smaller x
    for s, e in zip(starts, ends):
        if best is not None:
            if want_increasing:
                j = s + int(np.argmin(ys[s:e]))
                if ys[j] < best[0]:
                    return ((xs[best[1]], ys[best[1]]), (xs[j], ys[j]))
            else:
                j = s + int(np.argmax(ys[s:e]))
                if ys[j] > best[0]:
                    return ((xs[best[1]], ys[best[1]]), (xs[j], ys[j]))
        if want_increasing:
            k = s + int(np.argmax(ys[s:e]))
            if best is None or ys[k] > best[0]:
                best = (ys[k], k)
        else:
            k = s + int(np.argmin(ys[s:e]))
            if best is None or ys[k] < best[0]:
                best = (ys[k], k)
    return None


def _check(pi, pairs, floor, exempt):
    keep = pi.mass > floor
    if len(exempt):
        keep &= ~((pi.x == pi.y) & np.isin(pi.x, np.asarray(exempt, dtype=float)))
    x, y = pi.x[keep], pi.y[keep]
    down = y <= x
    up = x <= y
    for cond, mask, inc in pairs:
        sel = down if mask == "down" else up
        w = _scan(x[sel], y[sel], inc)
        if w is not None:
            wit = tuple((float(a), float(b)) for a, b in w)
            return MonotoneVerdict(False, cond, wit)
    return MonotoneVerdict(True)


def is_nondecreasing(pi, floor=0.0, exempt=()):
    """Conditions (a) and (b): downward and upward destinations both
    nondecreasing in the source, on the support of ``pi``.

    A diagonal point (x, x) is both a downward and an upward pair.  Diagonal
    entries at the points listed in ``exempt`` are left out of the check.
    """
    return _check(pi, (("a", "down", True), ("b", "up", True)), floor, exempt)


def is_nonincreasing(pi, floor=0.0, exempt=()):
    """Conditions (c) and (d): downward and upward destinations both
    nonincreasing in the source.

    Read literally, (c)/(d) reject any coupling that keeps mass on (b, b)
    while some x < b moves down (or on (a, a) while some x > a moves up), which
    is what the nested-supports coupling does when mu and nu share an atom at
    an end of [a, b].  Pass exempt=(a, b) to check only the moving part there.
    """
    return _check(pi, (("c", "down", False), ("d", "up", False)), floor, exempt)


# -- quantile slices -------------------------------------------------------------

def slice_masses(eta, lo, hi):
    """Atoms of ``eta`` and the mass each contributes to quantile levels [lo, hi]."""
    c = eta.cumulative
    m = np.minimum(c[1:], hi) - np.maximum(c[:-1], lo)
    m = np.where(m > 0, m, 0.0)
    nz = np.flatnonzero(m > 0)
    return eta.atoms[nz], m[nz]


def _validate(pi, tol, what):
    r = pi.residuals()
    sc = pi.scale()
    if r["row"] > tol * sc or r["col"] > tol * sc or r["martingale"] > tol * sc:
        raise InfeasibleSplit(f"{what}: residuals {r}")


# -- the non-decreasing constructor ----------------------------------------------

def build_nondecreasing(mu, nu, nu_l, nu_r, tol=1e-9):
    """The unique non-decreasing martingale coupling with directional parts
    (nu_l, 0, nu_r), or InfeasibleSplit when none exists.

    phi(u) is the amount of nu_l consumed by the first u units of mu.  For the
    atom x_k with cumulative weight U_k, phi(U_k) solves the row balance
        int_{phi_{k-1}}^{v} (F_l^-1 - x_k) + int_{U_{k-1}-phi_{k-1}}^{U_k-v} (F_r^-1 - x_k) = 0,
    quantiles being those of the sub-measures in their own mass units.  While
    the left slice stays below x the left side is non-increasing in v, so the
    root is its first crossing on [lo, min(hi, nu_l(x-))]; it is located
    exactly on the piecewise-linear graph.  If the balance is still positive
    at that cap, no admissible split exists.
    """
    L, R = nu_l.mass, nu_r.mass
    sc = scale_of(mu, nu)
    if L <= 0 or R <= 0:
        raise Degenerate("nu_l and nu_r must both carry mass")
    split_total = M.add(nu_l, nu_r)
    if not _same_grid_close(split_total, nu, tol):
        raise SplitMismatch("nu_l + nu_r differs from nu")
    cl, cr = nu_l.cumulative, nu_r.cumulative
    xs, ys, ms = [], [], []
    phi_prev, U_prev = 0.0, 0.0
    for k in range(len(mu)):
        x, w = float(mu.atoms[k]), float(mu.weights[k])
        U = U_prev + w
        last = k == len(mu) - 1
        lo = max(phi_prev, U - R)
        hi = min(phi_prev + w, L)
        if last:
            lo = hi = L
            if abs(U - (L + R)) > tol * max(1.0, U):
                raise InfeasibleSplit("mass of mu differs from nu_l + nu_r")
        if lo > hi + SNAP:
            raise InfeasibleSplit(f"empty admissible interval at atom {x!r}")
        hi = max(hi, lo)
        r0 = min(U_prev - phi_prev, R)
        Uf = min(U, L + R)

        def H(v, x=x, Uf=Uf, r0=r0, phi_prev=phi_prev):
            v = np.asarray(v, dtype=float)
            ll = np.clip(v, phi_prev, L)
            rr = np.clip(Uf - v, r0, R)
            left = nu_l.quantile_integral(np.full(v.shape, phi_prev), ll) - x * (ll - phi_prev)
            right = nu_r.quantile_integral(np.full(v.shape, r0), rr) - x * (rr - r0)
            return left + right

        htol = 1e-10 * sc * w
        if last:
            v = L
            if abs(float(H(np.array([v]))[0])) > htol * 10:
                raise InfeasibleSplit(f"row balance fails at the last atom {x!r}")
        else:
            if float(H(np.array([lo]))[0]) < -htol:
                raise InfeasibleSplit(f"no balancing split for atom {x!r}")
            # left slices must stay strictly below x: H is non-increasing up to there
            hi = max(min(hi, float(nu_l.cdf_left(x))), lo)
            v = first_crossing(H, lo, hi, np.concatenate((cl, Uf - cr)), level=0.0)
            if v is None:
                if float(H(np.array([hi]))[0]) > htol:
                    raise InfeasibleSplit(f"no balancing split for atom {x!r}")
                v = hi
            v = snap(v, cl, SNAP)
            v = Uf - snap(Uf - v, cr, SNAP)
            v = min(max(v, lo), hi)
        la, lm = slice_masses(nu_l, phi_prev, v)
        ra, rm = slice_masses(nu_r, r0, Uf - v)
        for atoms_, mass_, side in ((la, lm, -1), (ra, rm, 1)):
            keep = mass_ > ENTRY_FLOOR
            if side < 0 and np.any(atoms_[keep] >= x):
                raise InfeasibleSplit(f"left slice of atom {x!r} reaches {atoms_[keep].max()!r}")
            if side > 0 and np.any(atoms_[keep] <= x):
                raise InfeasibleSplit(f"right slice of atom {x!r} reaches {atoms_[keep].min()!r}")
            xs.append(np.full(int(keep.sum()), x))
            ys.append(atoms_[keep])
            ms.append(mass_[keep])
        phi_prev, U_prev = v, U
    pi = Coupling(mu, nu, np.concatenate(xs), np.concatenate(ys), np.concatenate(ms))
    _validate(pi, tol, "non-decreasing construction")
    return pi


def _same_grid_close(a, b, tol):
    grid = np.union1d(a.atoms, b.atoms)
    return float(np.max(np.abs(a.on_grid(grid) - b.on_grid(grid)), initial=0.0)) <= tol


def reduced_pair(mu, nu, split, tol=1e-12):
    """(mu + nu_l + nu_r - nu, nu_l + nu_r): what is left once the diagonal is removed."""
    grid = np.union1d(mu.atoms, split.nu_0.atoms)
    w = mu.on_grid(grid) - split.nu_0.on_grid(grid)
    if np.any(w < -tol):
        k = int(np.argmin(w))
        raise NegativeReducedMeasure(f"nu_0 exceeds mu at {grid[k]!r} by {-w[k]!r}")
    keep = w > tol
    return DiscreteMeasure(grid[keep], w[keep]), M.add(split.nu_l, split.nu_r)


def build_nondecreasing_with_diagonal(mu, nu, split, tol=1e-9):
    """Non-decreasing coupling with directional parts (nu_l, nu_0, nu_r):
    construct on the reduced pair, rescale, and put nu_0 back on the diagonal."""
    check_split(nu, split, tol)
    red_mu, red_nu = reduced_pair(mu, nu, split)
    s = red_mu.mass
    d0 = split.nu_0
    if s <= 1e-14 or red_nu.mass <= 1e-14:
        if red_nu.mass > tol or s > tol:
            raise InfeasibleSplit("diagonal leaves unmatched mass")
        pi = Coupling(mu, nu, d0.atoms, d0.atoms, d0.weights)
        _validate(pi, tol, "diagonal coupling")
        return pi
    inner = build_nondecreasing(red_mu.scaled(1 / s), red_nu.scaled(1 / s),
                                split.nu_l.scaled(1 / s), split.nu_r.scaled(1 / s), tol)
    pi = Coupling(mu, nu,
                  np.concatenate((inner.x, d0.atoms)),
                  np.concatenate((inner.y, d0.atoms)),
                  np.concatenate((inner.mass * s, d0.weights)))
    _validate(pi, tol, "diagonal-augmented construction")
    return pi


# -- nested supports ----------------------------------------------------------------

def detect_nested_supports(mu, nu):
    """(a, b) = hull of supp(mu) when nu((a, b)) = 0, else None."""
    a, b = float(mu.atoms[0]), float(mu.atoms[-1])
    inside = (nu.atoms > a) & (nu.atoms < b)
    return None if np.any(inside) else (a, b)


def build_nested_pi_down(mu, nu, tol=1e-9):
    """The non-increasing martingale coupling under nested supports.

    The part of nu left of a (levels [0, F_nu(a)]) is consumed from its top
    downwards and the part right of b (levels [F_nu(a), 1]) from its top
    downwards as x increases; psi(U_k) is the left mass used by the first k
    atoms, fixed by the row balance, which is strictly decreasing in psi.
    """
    _require_order(mu, nu)
    ab = detect_nested_supports(mu, nu)
    if ab is None:
        raise NoNestedSupports("nu charges the open hull of the support of mu")
    a, b = ab
    if a == b:
        return product_coupling(mu, nu)
    Fa = nu.cdf(a)
    top = nu.mass
    c = nu.cumulative
    sc = scale_of(mu, nu)
    xs, ys, ms = [], [], []
    psi_prev, U_prev = 0.0, 0.0
    for k in range(len(mu)):
        x, w = float(mu.atoms[k]), float(mu.weights[k])
        U = U_prev + w
        last = k == len(mu) - 1
        hi_r = top + psi_prev - U_prev  # current top of the unused right block

        def H(v, x=x, U=U, psi_prev=psi_prev, hi_r=hi_r):
            v = np.asarray(v, dtype=float)
            lo_l = np.clip(Fa - v, 0.0, Fa - psi_prev)
            lo_r = np.clip(top + v - U, Fa, hi_r)
            left = nu.quantile_integral(lo_l, np.full(v.shape, Fa - psi_prev)) - x * (Fa - psi_prev - lo_l)
            right = nu.quantile_integral(lo_r, np.full(v.shape, hi_r)) - x * (hi_r - lo_r)
            return left + right

        lo = max(psi_prev, U - (top - Fa))
        hi = min(psi_prev + w, Fa)
        if last:
            lo = hi = Fa
        if lo > hi + SNAP:
            raise InfeasibleSplit(f"empty admissible interval at atom {x!r}")
        hi = max(hi, lo)
        if last:
            v = hi
        else:
            v = first_crossing(H, lo, hi, np.concatenate((Fa - c, c - top + U)), level=0.0)
            if v is None:
                v = hi
            v = Fa - snap(Fa - v, c, SNAP)
            v = snap(top + v - U, c, SNAP) - top + U
            v = min(max(v, lo), hi)
        la, lm = slice_masses(nu, Fa - v, Fa - psi_prev)
        ra, rm = slice_masses(nu, top + v - U, hi_r)
        keep_l, keep_r = lm > ENTRY_FLOOR, rm > ENTRY_FLOOR
        xs += [np.full(int(keep_l.sum()), x), np.full(int(keep_r.sum()), x)]
        ys += [la[keep_l], ra[keep_r]]
        ms += [lm[keep_l], rm[keep_r]]
        psi_prev, U_prev = v, U
    pi = Coupling(mu, nu, np.concatenate(xs), np.concatenate(ys), np.concatenate(ms))
    r = pi.residuals()
    if max(r.values()) > tol * sc:
        raise NotConvexOrdered(f"non-increasing construction failed: residuals {r}")
    return pi


def build_nested_pi_up(mu, nu, cross_check=True, tol=1e-9):
    """The non-decreasing coupling under nested supports.

    Taken as the maximizer of int |y - x| over martingale couplings, checked to
    be non-decreasing, and rebuilt independently by the directional
    constructor with diagonal masses (mu({x}) - p_-(x) - p_+(x))^+ at the two
    ends of the support of mu.
    """
    from .pointmass import diagonal_floor

    _require_order(mu, nu)
    ab = detect_nested_supports(mu, nu)
    if ab is None:
        raise NoNestedSupports("nu charges the open hull of the support of mu")
    a, b = ab
    if a == b:
        return product_coupling(mu, nu)
    rep = solve_mot(mu, nu, CostSpec.power(1.0), "max", check_order=False)
    pi = rep.coupling
    verdict = is_nondecreasing(pi)
    if not verdict.ok:
        raise CrossCheckFailure(f"LP maximizer is not non-decreasing: {verdict}")
    if not cross_check:
        return pi
    split = decompose(pi)
    diag_x, diag_w = [], []
    for x in sorted({a, b}):
        want = diagonal_floor(mu, nu, x)
        got = split.nu_0.atom_weight(x)
        if abs(want - got) > 1e-7:
            raise CrossCheckFailure(f"diagonal mass at {x!r}: LP {got!r}, closed form {want!r}")
        if want > 0:
            diag_x.append(x)
            diag_w.append(want)
    nu0 = DiscreteMeasure(diag_x, diag_w)
    # move the rounding difference between the LP and the closed form onto nu_l / nu_r
    fixed = _rebalance(nu, DirectionalSplit(split.nu_l, nu0, split.nu_r))
    other = build_nondecreasing_with_diagonal(mu, nu, fixed, tol)
    d = coupling_distance(pi, other)
    if d > 1e-7:
        raise CrossCheckFailure(f"LP and constructor differ by TV {d!r}")
    return pi


def _rebalance(nu, split):
    """Adjust nu_l and nu_r atomwise so that the three parts add up to nu exactly."""
    grid = nu.atoms
    l = split.nu_l.on_grid(grid) if len(split.nu_l) else np.zeros(grid.size)
    r = split.nu_r.on_grid(grid) if len(split.nu_r) else np.zeros(grid.size)
    z = split.nu_0.on_grid(grid) if len(split.nu_0) else np.zeros(grid.size)
    gap = nu.weights - (l + r + z)
    use_l = l >= r
    l = l + np.where(use_l, gap, 0.0)
    r = r + np.where(use_l, 0.0, gap)
    l[l < 1e-15] = 0.0
    r[r < 1e-15] = 0.0
    mk = lambda v: DiscreteMeasure(grid[v > 0], v[v > 0])  # noqa: E731
    return DirectionalSplit(mk(l), split.nu_0, mk(r))


def _require_order(mu, nu):
    rep = convex_order(mu, nu)
    if not rep.holds:
        raise NotConvexOrdered(f"worst potential gap {rep.worst_gap!r} at {rep.witness!r}")


# -- dispersion ----------------------------------------------------------------------

def detect_dispersion(mu, nu):
    """Hull (a, b) of supp((mu - nu)^+) when (nu - mu)^+ puts no mass inside it."""
    excess = M.positive_part(mu, nu)
    if excess.is_empty():
        return None
    deficit = M.positive_part(nu, mu)
    a, b = float(excess.atoms[0]), float(excess.atoms[-1])
    inside = (deficit.atoms > a) & (deficit.atoms < b)
    return None if np.any(inside) else (a, b)


def dispersion_split(mu, nu):
    ab = detect_dispersion(mu, nu)
    if ab is None:
        return None
    a, b = ab
    deficit = M.positive_part(nu, mu)
    return DirectionalSplit(deficit.restrict(deficit.atoms <= a),
                            M.minimum(mu, nu),
                            deficit.restrict(deficit.atoms >= b))


def build_dispersion_coupling(mu, nu, tol=1e-9):
    """Keep mu ^ nu on the diagonal and couple (mu - nu)^+ to (nu - mu)^+
    by the non-increasing coupling of that nested pair."""
    _require_order(mu, nu)
    if detect_dispersion(mu, nu) is None:
        raise NoNestedSupports("(nu - mu)^+ charges the hull of supp((mu - nu)^+)")
    excess = M.positive_part(mu, nu)
    deficit = M.positive_part(nu, mu)
    common = M.minimum(mu, nu)
    s = excess.mass
    inner = build_nested_pi_down(excess.scaled(1 / s), deficit.scaled(1 / deficit.mass), tol)
    pi = Coupling(mu, nu,
                  np.concatenate((inner.x, common.atoms)),
                  np.concatenate((inner.y, common.atoms)),
                  np.concatenate((inner.mass * s, common.weights)))
    _validate(pi, tol, "dispersion coupling")
    return pi


# -- squared displacement --------------------------------------------------------

def sq_pushforward(pi):
    """Law of (y - x)^2 under ``pi``."""
    d2 = (pi.y - pi.x) ** 2
    tol = 1e-12 * max(1.0, float(d2.max(initial=0.0)))
    return DiscreteMeasure.from_pairs(d2, pi.mass, merge_tol=tol)


def sq_upper_bound(mu, nu):
    """Convex-order upper bound for the laws of (Y - X)^2 over martingale couplings.

    With f(z) = (mu{4x^2 > z} + nu{4y^2 > z}) ^ 1 and D = E nu[y^2] - E mu[x^2],
    zbar = sup{z : z f(z) + int_z^inf f >= D} and p in [f(zbar), f(zbar-)]
    solves zbar p + int_zbar^inf f = D.  The bound has CDF 1 - p on [0, zbar]
    and 1 - f(z) beyond.
    """
    if mu == nu:
        raise EqualMeasures("bound degenerates to a point mass at 0")
    D = nu.moment(2) - mu.moment(2)
    bx = np.concatenate((4 * mu.atoms ** 2, 4 * nu.atoms ** 2))
    bw = np.concatenate((mu.weights, nu.weights))
    pos = bx > 0
    bx, bw = bx[pos], bw[pos]
    order = np.argsort(bx)
    bx, bw = bx[order], bw[order]
    brk = np.unique(bx)
    # tail mass strictly above each breakpoint, i.e. f just after it (before the cap)
    above = np.array([bw[bx > t].sum() for t in brk])
    f_at = np.minimum(above, 1.0)  # f(t) (right-continuous)
    f_before = np.minimum(np.concatenate(([bw.sum()], above[:-1])), 1.0)  # f(t-)
    widths = np.diff(np.concatenate((brk, [brk[-1]])))
    seg = f_at * widths  # f is constant on [t_k, t_{k+1})
    tail = np.cumsum(seg[::-1])[::-1]  # int_{t_k}^inf f
    g_before = brk * f_before + tail  # g(t_k-)
    ok = np.flatnonzero(g_before >= D * (1 - 1e-15))
    if ok.size == 0:
        # cannot happen for mu <=cx nu; fall back to zbar = 0
        xs, ws = [0.0], [1.0 - min(float(bw.sum()), 1.0)]
        k0 = -1
    else:
        k0 = int(ok[-1])
        zbar = float(brk[k0])
        p = (D - float(tail[k0])) / zbar
        p = min(max(p, float(f_at[k0])), float(f_before[k0]))
        xs, ws = [0.0, zbar], [1.0 - p, p - float(f_at[k0])]
    for k in range(k0 + 1, brk.size):
        xs.append(float(brk[k]))
        ws.append(float(f_before[k] - f_at[k]))
    xs, ws = np.array(xs), np.array(ws)
    keep = ws > 0
    return DiscreteMeasure(xs[keep], ws[keep])
