"""Finitely supported (sub-)probability measures on the real line.

A ``DiscreteMeasure`` is an immutable pair of arrays: strictly increasing atoms
and positive weights.  Everything else (CDF, left-continuous quantile, exact
quantile integrals, potential u(x) = sum w_i |x_i - x|) is computed from them.
Total mass may be below one; sub-measures are used for directional parts.
"""

import csv
import io
import json
import math

import numpy as np

from .errors import BadParams, Empty, OutOfRange, ParseError

PROB_TOL = 1e-12


class DiscreteMeasure:
    __slots__ = ("atoms", "weights", "_cum", "_pref")

    def __init__(self, atoms, weights):
        x = np.array(atoms, dtype=float).reshape(-1)
        w = np.array(weights, dtype=float).reshape(-1)
        if x.shape != w.shape:
            raise BadParams("atoms and weights differ in length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(w))):
            raise BadParams("non-finite atom or weight")
        if np.any(w <= 0):
            raise BadParams("weights must be positive")
        if x.size > 1 and np.any(np.diff(x) <= 0):
            raise BadParams("atoms must be strictly increasing")
        x.setflags(write=False)
        w.setflags(write=False)
        self.atoms = x
        self.weights = w
        cum = np.concatenate(([0.0], np.cumsum(w)))
        cum.setflags(write=False)
        self._cum = cum
        pref = np.concatenate(([0.0], np.cumsum(w * x)))
        pref.setflags(write=False)
        self._pref = pref

    # -- construction helpers -------------------------------------------------

    @classmethod
    def empty(cls):
        return cls([], [])

    @classmethod
    def dirac(cls, x, w=1.0):
        return cls([x], [w])

    @classmethod
    def from_pairs(cls, xs, ws, merge_tol=0.0, drop_below=0.0):
        """Sort, merge atoms closer than ``merge_tol`` and drop weights <= ``drop_below``.

        Merged atoms sit at the weighted mean of their members, so the first
        moment is unchanged.
        """
        xs = np.asarray(xs, dtype=float).reshape(-1)
        ws = np.asarray(ws, dtype=float).reshape(-1)
        if xs.size == 0:
            return cls.empty()
        order = np.argsort(xs, kind="stable")
        xs, ws = xs[order], ws[order]
        out_x, out_w = [], []
        gx, gw, gm = xs[0], ws[0], ws[0] * xs[0]
        start = xs[0]
        for x, w in zip(xs[1:], ws[1:]):
            if x - start <= merge_tol:
                gw += w
                gm += w * x
            else:
                out_x.append(gx if gw == 0 else (gm / gw if merge_tol > 0 else gx))
                out_w.append(gw)
                gx, gw, gm, start = x, w, w * x, x
        out_x.append(gx if gw == 0 else (gm / gw if merge_tol > 0 else gx))
        out_w.append(gw)
        out_x = np.array(out_x)
        out_w = np.array(out_w)
        keep = out_w > drop_below
        return cls(out_x[keep], out_w[keep])

    # -- basic views ----------------------------------------------------------

    def __len__(self):
        return self.atoms.size

    @property
    def mass(self):
        return float(self._cum[-1])

    @property
    def cumulative(self):
        """Breakpoints 0 = c_0 < c_1 < ... < c_n = mass of the quantile function."""
        return self._cum

    def is_empty(self):
        return self.atoms.size == 0

    def mean(self):
        if self.is_empty():
            raise Empty("mean of an empty measure")
        return float(self._pref[-1] / self.mass)

    def moment(self, k):
        return float(np.sum(self.weights * self.atoms ** k))

    def span(self):
        if self.atoms.size == 0:
            return 0.0
        return float(self.atoms[-1] - self.atoms[0])

    def scale(self):
        """Magnitude used to make tolerances relative."""
        if self.atoms.size == 0:
            return 1.0
        return max(1.0, float(np.max(np.abs(self.atoms))))

    def is_probability(self, tol=PROB_TOL):
        return abs(self.mass - 1.0) <= tol

    def atom_weight(self, x):
        i = np.searchsorted(self.atoms, x)
        if i < self.atoms.size and self.atoms[i] == x:
            return float(self.weights[i])
        return 0.0

    # -- CDF and quantiles ----------------------------------------------------

    def cdf(self, x):
        """eta((-inf, x]); vectorized."""
        idx = np.searchsorted(self.atoms, x, side="right")
        out = self._cum[idx]
        return float(out) if np.ndim(out) == 0 else out

    def cdf_left(self, x):
        """eta((-inf, x))."""
        idx = np.searchsorted(self.atoms, x, side="left")
        out = self._cum[idx]
        return float(out) if np.ndim(out) == 0 else out

    def _check_level(self, u, lo_open=True):
        u = np.asarray(u, dtype=float)
        m = self.mass
        slack = PROB_TOL * max(1.0, m)
        bad = (u <= 0) if lo_open else (u < -slack)
        if np.any(bad) or np.any(u > m + slack):
            raise OutOfRange(f"level outside (0, {m!r}]")
        return np.clip(u, 0.0, m)

    def quantile(self, u):
        """Left-continuous generalized inverse inf{x : u <= F(x)}."""
        if self.is_empty():
            raise Empty("quantile of an empty measure")
        u = self._check_level(u)
        idx = np.searchsorted(self._cum[1:], u, side="left")
        idx = np.minimum(idx, self.atoms.size - 1)
        out = self.atoms[idx]
        return float(out) if np.ndim(out) == 0 else out

    def quantile_integral(self, a, b):
        """Exact integral of the quantile function over [a, b], 0 <= a <= b <= mass.

        Accumulates whole segments plus the two partial end segments; when a and
        b fall in one segment the result is (b - a) * atom with no cancellation.
        Vectorized over a and b.
        """
        a = self._check_level(a, lo_open=False)
        b = self._check_level(b, lo_open=False)
        if np.any(a > b + PROB_TOL * max(1.0, self.mass)):
            raise OutOfRange("quantile_integral needs a <= b")
        b = np.maximum(a, b)
        scalar = a.ndim == 0 and b.ndim == 0
        a, b = np.atleast_1d(a), np.atleast_1d(b)
        a, b = np.broadcast_arrays(a, b)
        out = np.zeros(a.shape)
        n = self.atoms.size
        if n == 0:
            return 0.0 if scalar else out
        c = self._cum
        ka = np.minimum(np.searchsorted(c[1:], a, side="right"), n - 1)
        kb = np.minimum(np.searchsorted(c[1:], b, side="left"), n - 1)
        same = ka == kb
        x = self.atoms
        out[same] = (b[same] - a[same]) * x[ka[same]]
        d = ~same
        if np.any(d):
            ia, ib = ka[d], kb[d]
            head = (c[ia + 1] - a[d]) * x[ia]
            tail = (b[d] - c[ib]) * x[ib]
            mid = self._pref[ib] - self._pref[ia + 1]
            out[d] = head + mid + tail
        return float(out[0]) if scalar else out

    def integral_to(self, t):
        """Integral of the quantile function over [0, t]."""
        return self.quantile_integral(np.zeros_like(np.asarray(t, dtype=float)), t)

    # -- potential ------------------------------------------------------------

    def potential(self, x):
        """u(x) = sum_i w_i |x_i - x|; vectorized."""
        xq = np.asarray(x, dtype=float)
        flat = xq.reshape(-1)
        if self.atoms.size == 0:
            res = np.zeros(flat.shape)
        elif flat.size * self.atoms.size <= 4_000_000:
            res = np.abs(self.atoms[None, :] - flat[:, None]) @ self.weights
        else:
            # prefix sums: u(x) = x F(x) - P(x) + (P_tot - P(x)) - x (m - F(x))
            k = np.searchsorted(self.atoms, flat, side="right")
            F = self._cum[k]
            P = self._pref[k]
            res = flat * F - P + (self._pref[-1] - P) - flat * (self.mass - F)
        return float(res[0]) if xq.ndim == 0 else res.reshape(xq.shape)

    def potential_slope(self, x):
        """Right derivative of u at x: 2 F(x) - mass."""
        return 2.0 * self.cdf(x) - self.mass

    # -- arithmetic -----------------------------------------------------------

    def scaled(self, c):
        if c <= 0:
            return DiscreteMeasure.empty()
        return DiscreteMeasure(self.atoms, self.weights * c)

    def normalized(self):
        return self.scaled(1.0 / self.mass)

    def shifted(self, s):
        return DiscreteMeasure(self.atoms + s, self.weights)

    def restrict(self, mask):
        mask = np.asarray(mask, dtype=bool)
        return DiscreteMeasure(self.atoms[mask], self.weights[mask])

    def on_grid(self, grid):
        """Weights of this measure on the sorted ``grid`` (zero off-atom)."""
        grid = np.asarray(grid, dtype=float)
        out = np.zeros(grid.size)
        idx = np.searchsorted(grid, self.atoms)
        ok = (idx < grid.size)
        ok[ok] = grid[idx[ok]] == self.atoms[ok]
        if not np.all(ok):
            raise BadParams("measure has atoms off the grid")
        out[idx] = self.weights
        return out

    def __eq__(self, other):
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return (np.array_equal(self.atoms, other.atoms)
                and np.array_equal(self.weights, other.weights))

    def __hash__(self):
        return hash((self.atoms.tobytes(), self.weights.tobytes()))

    def allclose(self, other, tol=1e-12):
        return (self.atoms.size == other.atoms.size
                and np.allclose(self.atoms, other.atoms, rtol=0, atol=tol * self.scale())
                and np.allclose(self.weights, other.weights, rtol=0, atol=tol))

    def __repr__(self):
        body = ", ".join(f"{w:.6g}@{x:.6g}" for x, w in zip(self.atoms[:6], self.weights[:6]))
        more = "" if self.atoms.size <= 6 else f", ... ({self.atoms.size} atoms)"
        return f"DiscreteMeasure({body}{more})"

    # -- serialization --------------------------------------------------------

    def to_dict(self):
        return {"atoms": [{"x": float(x), "w": float(w)} for x, w in zip(self.atoms, self.weights)]}

    @classmethod
    def from_dict(cls, d):
        try:
            items = d["atoms"]
            xs = [float(a["x"]) for a in items]
            ws = [float(a["w"]) for a in items]
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"bad measure object: {e}") from None
        return _checked(xs, ws)

    def to_json(self):
        return json.dumps(self.to_dict(), default=_fmt_json)

    @classmethod
    def from_json(cls, text):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as e:
            raise ParseError(str(e)) from None
        return cls.from_dict(d)

    def to_csv(self):
        buf = io.StringIO()
        for x, w in zip(self.atoms, self.weights):
            buf.write(f"{fmt(x)},{fmt(w)}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        xs, ws = [], []
        for row in csv.reader(io.StringIO(text)):
            if not row or not "".join(row).strip() or row[0].strip().startswith("#"):
                continue
            if len(row) != 2:
                raise ParseError(f"expected 'x,w', got {row!r}")
            try:
                xs.append(float(row[0]))
                ws.append(float(row[1]))
            except ValueError:
                if not xs and row[0].strip() == "x":
                    continue  # header line
                raise ParseError(f"non-numeric row {row!r}") from None
        return _checked(xs, ws)


def _checked(xs, ws):
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise ParseError("atoms must be sorted strictly increasing")
    if any(not (w > 0) for w in ws):
        raise ParseError("weights must be positive")
    try:
        return DiscreteMeasure(xs, ws)
    except BadParams as e:
        raise ParseError(e.message) from None


def fmt(v):
    """17 significant digits: round-trips any double."""
    return format(float(v), ".17g")


def _fmt_json(v):
    return float(v)


def combine(mu, nu, op):
    """Atomwise ``op(weights_mu, weights_nu)`` on the union grid; drops nonpositive results."""
    grid = np.union1d(mu.atoms, nu.atoms)
    a = mu.on_grid(grid)
    b = nu.on_grid(grid)
    w = op(a, b)
    keep = w > 0
    return DiscreteMeasure(grid[keep], w[keep])


def add(mu, nu):
    return combine(mu, nu, lambda a, b: a + b)


def positive_part(mu, nu):
    """(mu - nu)^+ atomwise."""
    return combine(mu, nu, lambda a, b: np.maximum(a - b, 0.0))


def minimum(mu, nu):
    return combine(mu, nu, np.minimum)


def empirical(samples, center_to=0.0):
    """Empirical measure of ``samples`` shifted so that its mean is ``center_to``.

    Each sample carries weight 1/n; samples within 1e-12 * (max - min) merge.
    """
    s = np.asarray(samples, dtype=float).reshape(-1)
    if s.size == 0:
        raise Empty("no samples")
    shifted = s + (center_to - float(np.mean(s)))
    tol = 1e-12 * float(np.max(shifted) - np.min(shifted))
    mu = DiscreteMeasure.from_pairs(shifted, np.full(s.size, 1.0 / s.size), merge_tol=tol)
    # recentre exactly; merging and the mean itself may leave ulp-level drift
    drift = center_to - mu.mean()
    if drift != 0.0:
        mu = mu.shifted(drift)
    return mu


def exact_pmf(family, shift=0.0, **params):
    """Shifted pmf of ``binomial(n, p)`` or ``poisson(lam)`` as a DiscreteMeasure.

    The Poisson law is truncated once the remaining tail is below 1e-14 and
    renormalized.
    """
    if family == "binomial":
        n = params.get("n")
        p = params.get("p")
        if not isinstance(n, (int, np.integer)) or n < 0 or p is None or not (0 <= p <= 1):
            raise BadParams("binomial needs integer n >= 0 and p in [0, 1]")
        ks = np.arange(n + 1)
        w = np.array([math.comb(int(n), int(k)) * p ** k * (1 - p) ** (n - k) for k in ks])
    elif family == "poisson":
        lam = params.get("lam", params.get("lambda"))
        if lam is None or not (lam > 0) or not math.isfinite(lam):
            raise BadParams("poisson needs lam > 0")
        w = []
        term = math.exp(-lam)
        k = 0
        acc = 0.0
        while True:
            w.append(term)
            acc += term
            k += 1
            term = term * lam / k
            # remaining tail is below term / (1 - lam/(k+1)) once k+1 > lam
            if k + 1 > 2 * lam and term / (1 - lam / (k + 1)) < 1e-14:
                break
            if k > 10_000:
                raise BadParams("poisson truncation did not converge")
        w = np.array(w)
        w = w / w.sum()
        ks = np.arange(w.size)
    else:
        raise BadParams(f"unknown family {family!r}")
    keep = w > 0
    return DiscreteMeasure(ks[keep].astype(float) + shift, w[keep])


def uniform_pieces(pieces, n):
    """Equal-mass midpoint discretization of a piecewise-uniform density.

    ``pieces`` is a list of (lo, hi, mass); each piece becomes n atoms of mass
    mass/n at the midpoints of n equal subintervals.  Used by callers that need
    a discrete stand-in for a continuous law.
    """
    xs, ws = [], []
    for lo, hi, m in pieces:
        h = (hi - lo) / n
        xs.append(lo + h * (np.arange(n) + 0.5))
        ws.append(np.full(n, m / n))
    return DiscreteMeasure.from_pairs(np.concatenate(xs), np.concatenate(ws))


def scale_of(*measures):
    return max(m.scale() for m in measures)
