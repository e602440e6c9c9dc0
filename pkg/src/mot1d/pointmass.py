"""Diagonal mass at an atom x of mu: p_-(x), p_+(x), q(x), eta_x and the infimum
of pi({(x, x)}) over martingale couplings.

p_+ is the amount of nu just above x whose excess over x equals the call
spread gap int (z-x)^+ nu - int (y-x)^+ mu; p_- is the mirror quantity below x.
If mu({x}) exceeds p_- + p_+, every martingale coupling keeps the surplus on
the diagonal and the kernel at x is forced to eta_x.
"""

from dataclasses import dataclass

import numpy as np

from .errors import PotentialsTouch
from .measures import DiscreteMeasure, scale_of
from .motlp import solve_mot
from .plroot import first_crossing

TOUCH_TOL = 1e-10


@dataclass(frozen=True)
class PointMassProfile:
    x: float
    u_mu: float
    u_nu: float
    p_minus: float
    p_plus: float
    q: float
    eta_x: DiscreteMeasure
    inf_diag: float
    residual_plus: float
    residual_minus: float

    def to_dict(self):
        return {
            "x": self.x, "u_mu": self.u_mu, "u_nu": self.u_nu,
            "p_minus": self.p_minus, "p_plus": self.p_plus, "q": self.q,
            "inf_diag": self.inf_diag,
            "eta_x": None if self.eta_x is None else self.eta_x.to_dict(),
            "residual_plus": self.residual_plus, "residual_minus": self.residual_minus,
        }


def _upper_excess(nu, F, x):
    """u -> int_F^{F+u} (F_nu^-1 - x), increasing."""
    return lambda u: nu.quantile_integral(np.full(np.shape(u), F), F + np.asarray(u)) - x * np.asarray(u)


def _lower_excess(nu, Fm, x):
    """u -> int_{Fm-u}^{Fm} (x - F_nu^-1), increasing."""
    return lambda u: x * np.asarray(u) - nu.quantile_integral(Fm - np.asarray(u), np.full(np.shape(u), Fm))


def touching(mu, nu, x, tol=TOUCH_TOL):
    return nu.potential(x) <= mu.potential(x) + tol * scale_of(mu, nu)


def point_mass_profile(mu, nu, x, tol=TOUCH_TOL):
    x = float(x)
    sc = scale_of(mu, nu)
    u_mu, u_nu = mu.potential(x), nu.potential(x)
    if u_nu <= u_mu + tol * sc:
        raise PotentialsTouch(f"u_nu({x!r}) - u_mu({x!r}) = {u_nu - u_mu!r}")
    top = nu.mass
    F, Fm = nu.cdf(x), nu.cdf_left(x)
    c = nu.cumulative
    gap_plus = float(np.sum(nu.weights * np.maximum(nu.atoms - x, 0))
                     - np.sum(mu.weights * np.maximum(mu.atoms - x, 0)))
    gap_minus = float(np.sum(nu.weights * np.maximum(x - nu.atoms, 0))
                      - np.sum(mu.weights * np.maximum(x - mu.atoms, 0)))
    up = _upper_excess(nu, F, x)
    dn = _lower_excess(nu, Fm, x)
    p_plus = first_crossing(lambda u: gap_plus - up(u), 0.0, top - F, c - F)
    p_minus = first_crossing(lambda u: gap_minus - dn(u), 0.0, Fm, Fm - c)
    p_plus = top - F if p_plus is None else p_plus
    p_minus = Fm if p_minus is None else p_minus
    res_p = float(abs(up(np.array([p_plus]))[0] - gap_plus))
    res_m = float(abs(dn(np.array([p_minus]))[0] - gap_minus))
    m_x = mu.atom_weight(x)
    q = None
    eta = None
    surplus = m_x - p_minus - p_plus
    if surplus <= 1e-12 * max(m_x, 1e-300):
        surplus = 0.0
    inf_diag = surplus
    if surplus > 0:
        parts = [(np.array([x]), np.array([surplus]))]
        parts.append(_slice(nu, Fm - p_minus, Fm))
        parts.append(_slice(nu, F, F + p_plus))
        eta = _assemble(parts, m_x)
    elif m_x > 0:
        lo = max(m_x - p_plus, 0.0)
        hi = max(min(p_minus, m_x), lo)

        def K(v):
            v = np.asarray(v, dtype=float)
            return (nu.quantile_integral(Fm - v, np.full(v.shape, Fm))
                    + nu.quantile_integral(np.full(v.shape, F), F + m_x - v) - m_x * x)

        q = first_crossing(K, lo, hi, np.concatenate((Fm - c, F + m_x - c)))
        q = hi if q is None else q
        eta = _assemble([_slice(nu, Fm - q, Fm), _slice(nu, F, F + m_x - q)], m_x)
    return PointMassProfile(x, float(u_mu), float(u_nu), float(p_minus), float(p_plus),
                            None if q is None else float(q), eta, float(inf_diag), res_p, res_m)


def _slice(nu, lo, hi):
    cc = nu.cumulative
    m = np.minimum(cc[1:], hi) - np.maximum(cc[:-1], lo)
    nz = m > 1e-15
    return nu.atoms[nz], m[nz]


def _assemble(parts, m_x):
    xs = np.concatenate([p[0] for p in parts])
    ws = np.concatenate([p[1] for p in parts]) / m_x
    keep = ws > 0
    return DiscreteMeasure.from_pairs(xs[keep], ws[keep])


def diagonal_floor(mu, nu, x, tol=TOUCH_TOL):
    """inf pi({(x, x)}) over martingale couplings: mu({x}) when the potentials
    touch at x, (mu({x}) - p_- - p_+)^+ otherwise."""
    if touching(mu, nu, x, tol):
        return mu.atom_weight(x)
    return point_mass_profile(mu, nu, x, tol).inf_diag


def min_diag_mass(mu, nu, x, tol=TOUCH_TOL):
    return diagonal_floor(mu, nu, x, tol)


def min_diag_mass_lp(mu, nu, x):
    """LP route: minimize the single cell (x, x)."""
    C = np.zeros((len(mu), len(nu)))
    i = np.searchsorted(mu.atoms, x)
    j = np.searchsorted(nu.atoms, x)
    if i < len(mu) and j < len(nu) and mu.atoms[i] == x and nu.atoms[j] == x:
        C[i, j] = 1.0
    else:
        return 0.0
    return solve_mot(mu, nu, C, "min").value


def x_zero_set(mu, nu, tol=TOUCH_TOL):
    """Atoms of mu that every martingale coupling leaves partly on the diagonal.

    Returns (x, forced_mass, reason) with reason "touch" where u_mu = u_nu
    (forced mass mu({x})) and "surplus" where mu({x}) > p_- + p_+.
    """
    out = []
    for x, w in zip(mu.atoms, mu.weights):
        x = float(x)
        if touching(mu, nu, x, tol):
            out.append((x, float(w), "touch"))
            continue
        prof = point_mass_profile(mu, nu, x, tol)
        if prof.inf_diag > 0:
            out.append((x, prof.inf_diag, "surplus"))
    return out
