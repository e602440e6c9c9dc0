"""alpha_rho and the two-point example families.

psi_rho(a) = a + a^(2-rho) (1-a)^(rho-1) + 1 - rho vanishes identically at
rho = 2; divided by (2 - rho) it tends to h(a) = 1 + (1-a) ln(a/(1-a)), which
is how alpha_2 is defined.  All root finding is done on psi / (2 - rho),
which is negative below alpha_rho and positive above it for every rho > 1.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .couplings import (build_nested_pi_down, build_nested_pi_up, is_nondecreasing,
                        is_nonincreasing)
from .errors import ConstraintViolated, DomainError, SupportShapeMismatch
from .measures import DiscreteMeasure
from .motlp import Coupling, CostSpec, coupling_distance, solve_mot

NEAR_TWO = 1e-8
BRACKET = (1e-9, 0.5 - 1e-9)
MAX_BISECT = 200


def _psi_over_gap(rho, a):
    """psi_rho(a) / (2 - rho), continuous through rho = 2."""
    eps = 2.0 - rho
    t = math.log(a / (1.0 - a))
    if abs(eps) < NEAR_TWO:
        return h(a)
    if eps * t > 700.0:
        return math.inf if eps > 0 else -math.inf
    return (1.0 - a) * math.expm1(eps * t) / eps + 1.0


def psi_rho(rho, alpha):
    rho, alpha = float(rho), float(alpha)
    if not rho > 1 or not (0 < alpha <= 1) or not math.isfinite(rho):
        raise DomainError(f"psi_rho needs rho > 1 and alpha in (0, 1], got {rho!r}, {alpha!r}")
    if alpha == 1.0:
        return 2.0 - rho
    eps = 2.0 - rho
    t = math.log(alpha / (1.0 - alpha))
    if eps * t > 700.0:
        return math.inf
    # (1-a)((a/(1-a))^eps - 1) + eps, accurate when eps is small
    return (1.0 - alpha) * math.expm1(eps * t) + eps


def h(alpha):
    alpha = float(alpha)
    if not 0 < alpha < 1:
        raise DomainError(f"h needs alpha in (0, 1), got {alpha!r}")
    return 1.0 + (1.0 - alpha) * math.log(alpha / (1.0 - alpha))


@dataclass(frozen=True)
class AlphaRho:
    rho: float
    alpha: float
    residual: float
    method: str

    def to_dict(self):
        return {"rho": self.rho, "alpha": self.alpha, "residual": self.residual,
                "method": self.method}


def _bisect(g, lo, hi):
    glo = g(lo)
    if glo > 0 or g(hi) < 0:
        raise DomainError("root not bracketed")
    for _ in range(MAX_BISECT):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    return lo if abs(g(lo)) <= abs(g(hi)) else hi


def alpha_rho(rho):
    rho = float(rho)
    if not rho > 1 or not math.isfinite(rho):
        raise DomainError(f"alpha_rho needs rho > 1, got {rho!r}")
    if abs(rho - 2.0) < NEAR_TWO:
        a = _bisect(h, *BRACKET)
        return AlphaRho(rho, a, abs(h(a)), "h-root")
    a = _bisect(lambda v: _psi_over_gap(rho, v), *BRACKET)
    return AlphaRho(rho, a, abs(psi_rho(rho, a)), "psi-root")


def gap_power(rho):
    """(rho - 1)^(1/(2 - rho)), with its limit 1/e at rho = 2."""
    rho = float(rho)
    if not rho > 1:
        raise DomainError(f"gap_power needs rho > 1, got {rho!r}")
    if abs(rho - 2.0) < NEAR_TWO:
        return math.exp(-1.0)
    return math.exp(math.log(rho - 1.0) / (2.0 - rho))


# -- f_rho -----------------------------------------------------------------------

def f_rho(x, y, m, z, rho):
    x = np.asarray(x, dtype=float)
    return ((z - m) / (z - y) * np.abs(x - y) ** rho + (m - y) / (z - y) * np.abs(z - x) ** rho
            - np.abs(x - m) ** rho)


def _direction(vals, tol):
    d = np.diff(vals)
    if np.all(d > -tol) and vals[-1] - vals[0] > 0:
        return "increasing"
    if np.all(d < tol) and vals[-1] - vals[0] < 0:
        return "decreasing"
    return "neither"


def f_rho_window(y, m, z, rho, points=1000):
    """Evaluate f_rho on the two windows where its direction is known and
    report whether the observed direction matches.

    rho in (1, 2) or rho > 2 uses [y, (1-a)m + a y] and [(1-a)m + a z, z] with
    a = alpha_rho; rho in (0, 1] uses [y, m] and [m, z].
    """
    y, m, z, rho = float(y), float(m), float(z), float(rho)
    if not y < m < z:
        raise DomainError("f_rho_window needs y < m < z")
    if not rho > 0 or rho == 2.0:
        raise DomainError(f"f_rho_window needs rho > 0, rho != 2, got {rho!r}")
    if rho <= 1:
        a = None
        wins = [(y, m, "increasing"), (m, z, "decreasing")]
    else:
        a = alpha_rho(rho).alpha
        first, second = ("increasing", "decreasing") if rho < 2 else ("decreasing", "increasing")
        wins = [(y, (1 - a) * m + a * y, first), ((1 - a) * m + a * z, z, second)]
    scale = max(abs(y), abs(z), 1.0) ** rho
    out = []
    for lo, hi, want in wins:
        grid = np.linspace(lo, hi, points)
        got = _direction(f_rho(grid, y, m, z, rho), 1e-13 * scale)
        out.append({"window": [lo, hi], "expected": want, "observed": got, "ok": got == want})
    return {"rho": rho, "alpha": a, "windows": out, "ok": all(w["ok"] for w in out)}


# -- family generators -------------------------------------------------------------

def _require(cond, name, message):
    if not cond:
        raise ConstraintViolated(name, message)


def _two_point(p, xm, xp):
    return DiscreteMeasure([xm, xp], [p, 1.0 - p])


def _coupling(mu, nu, rows):
    return Coupling.from_entries(rows, mu, nu)


def _measure(pairs):
    return DiscreteMeasure.from_pairs([a for a, _ in pairs], [w for _, w in pairs])


def gen_diffcouplcr(rho, rho_p, y, m, z, beta, eps):
    """(mu_eps, nu) for which the rho- and rho'-maximizers differ."""
    rho, rho_p, y, m, z, beta, eps = map(float, (rho, rho_p, y, m, z, beta, eps))
    _require(0 < rho_p < rho <= 1, "exponents", "need 0 < rho' < rho <= 1")
    _require(y < (y + z) / 2 < m < z, "points", "need y < (y+z)/2 < m < z")
    b_max = min(2 * rho * ((m - y) / (z - y) * (z - m) ** (rho - 1)
                           - (z - m) / (z - y) * (m - y) ** (rho - 1)),
                (2 * m - y - z) / (z - m))
    _require(0 < beta < b_max, "beta", f"need 0 < beta < {b_max!r}")
    e_max = min(z - m, (m - y) / (1 + beta) ** (1 / rho),
                2 * (z - m) * (m - y) / (3 * (z - y)), 1.0)
    _require(0 < eps < e_max, "eps", f"need 0 < eps < {e_max!r}")
    k = (1 + beta * eps ** (1 - rho)) ** (1 / rho)
    mu = DiscreteMeasure([m - k * eps, m + eps], [1 / (1 + k), k / (1 + k)])
    nu = _measure([(y, 2 * (z - m) / (3 * (z - y))), (m, 1 / 3), (z, 2 * (m - y) / (3 * (z - y)))])
    return mu, nu


@dataclass(frozen=True)
class MhkFamily:
    mu: DiscreteMeasure
    nu_under: DiscreteMeasure
    pi_up: Coupling
    nu_over: DiscreteMeasure
    pi_down: Coupling

    def to_dict(self):
        return {"mu": self.mu.to_dict(), "nu_under": self.nu_under.to_dict(),
                "pi_up": self.pi_up.to_dict(), "nu_over": self.nu_over.to_dict(),
                "pi_down": self.pi_down.to_dict()}


def gen_mhk(p, ym, yp, xm, xp, zm, zp):
    """Two-point mu with nu_under (sq-infimum attained by pi_up) and nu_over
    (sq-supremum attained by pi_down)."""
    p, ym, yp, xm, xp, zm, zp = map(float, (p, ym, yp, xm, xp, zm, zp))
    _require(0 < p < 1, "p", "need 0 < p < 1")
    _require(ym < yp < xm < xp < zm < zp, "order", "need y- < y+ < x- < x+ < z- < z+")
    _require(xp - ym >= zm - xm, "left-reach", "need x+ - y- >= z- - x-")
    _require(zp - xm >= xp - yp, "right-reach", "need z+ - x- >= x+ - y+")
    _require(min(xm - ym, xp - yp, zm - xm, zp - xp) >= max(xm - yp, zm - xp), "4vee",
             "need (x- - y-)^(x+ - y+)^(z- - x-)^(z+ - x+) >= (x- - y+)v(z- - x+)")
    q = 1 - p
    mu = _two_point(p, xm, xp)
    up = [(xm, ym, p * (zm - xm) / (zm - ym)), (xm, zm, p * (xm - ym) / (zm - ym)),
          (xp, yp, q * (zp - xp) / (zp - yp)), (xp, zp, q * (xp - yp) / (zp - yp))]
    down = [(xm, yp, p * (zp - xm) / (zp - yp)), (xm, zp, p * (xm - yp) / (zp - yp)),
            (xp, ym, q * (zm - xp) / (zm - ym)), (xp, zm, q * (xp - ym) / (zm - ym))]
    nu_under = _measure([(b, w) for _, b, w in up])
    nu_over = _measure([(b, w) for _, b, w in down])
    return MhkFamily(mu, nu_under, _coupling(mu, nu_under, up), nu_over,
                     _coupling(mu, nu_over, down))


@dataclass(frozen=True)
class MstarFamily:
    rho: float
    mu: DiscreteMeasure
    nu_over: DiscreteMeasure
    nu_under: DiscreteMeasure
    pi_over: Coupling
    pi_under: Coupling
    verdicts: dict = field(default_factory=dict)

    def to_dict(self):
        return {"rho": self.rho, "mu": self.mu.to_dict(), "nu_over": self.nu_over.to_dict(),
                "nu_under": self.nu_under.to_dict(), "pi_over": self.pi_over.to_dict(),
                "pi_under": self.pi_under.to_dict(), "verdicts": self.verdicts}


def _senses(rho):
    """LP senses attained by (pi_over, pi_under) for exponent rho."""
    return ("max", "min") if rho < 2 else ("min", "max")


def gen_mstar(p, ym, yp, zm, zp, xm, xp, rho, verify=True, tv_tol=1e-7):
    """The non-monotone candidates pi_over in Pi_M(mu, nu_over) and pi_under in
    Pi_M(mu, nu_under), with LP verdicts on whether each is the optimizer."""
    p, ym, yp, zm, zp, xm, xp, rho = map(float, (p, ym, yp, zm, zp, xm, xp, rho))
    _require(rho > 1 and rho != 2, "rho", "need rho in (1, 2) or rho > 2")
    _require(0 < p < 1, "p", "need 0 < p < 1")
    _require(ym < yp < xm < xp < zm < zp, "order", "need y- < y+ < x- < x+ < z- < z+")
    _require(zm - ym > zp - zm, "outer-gap", "need z- - y- > z+ - z-")
    _require(zm - yp >= gap_power(rho) * (zp - zm), "inner-gap",
             "need z- - y+ >= (rho-1)^(1/(2-rho)) (z+ - z-)")
    q = 1 - p
    mu = _two_point(p, xm, xp)
    over = [(xm, ym, p * (zp - xm) / (zp - ym)), (xm, zp, p * (xm - ym) / (zp - ym)),
            (xp, yp, q * (zm - xp) / (zm - yp)), (xp, zm, q * (xp - yp) / (zm - yp))]
    # the (x-, z-) weight uses z- - y+, the denominator that makes the row a martingale
    under = [(xm, yp, p * (zm - xm) / (zm - yp)), (xm, zm, p * (xm - yp) / (zm - yp)),
             (xp, ym, q * (zp - xp) / (zp - ym)), (xp, zp, q * (xp - ym) / (zp - ym))]
    nu_over = _measure([(b, w) for _, b, w in over])
    nu_under = _measure([(b, w) for _, b, w in under])
    pi_over = _coupling(mu, nu_over, over)
    pi_under = _coupling(mu, nu_under, under)
    verdicts = {}
    if verify:
        s_over, s_under = _senses(rho)
        cost = CostSpec.power(rho)
        r1 = solve_mot(mu, nu_over, cost, s_over)
        r2 = solve_mot(mu, nu_under, cost, s_under)
        d1 = coupling_distance(r1.coupling, pi_over)
        d2 = coupling_distance(r2.coupling, pi_under)
        verdicts = {
            "pi_over": {"sense": s_over, "optimal": d1 <= tv_tol, "tv": d1,
                        "lp_value": r1.value,
                        "candidate_value": float(np.sum(pi_over.mass * cost(np.abs(pi_over.y - pi_over.x))))},
            "pi_under": {"sense": s_under, "optimal": d2 <= tv_tol, "tv": d2,
                         "lp_value": r2.value,
                         "candidate_value": float(np.sum(pi_under.mass * cost(np.abs(pi_under.y - pi_under.x))))},
        }
    return MstarFamily(rho, mu, nu_over, nu_under, pi_over, pi_under, verdicts)


def monotone_flags(pi):
    return {"nondecreasing": is_nondecreasing(pi).ok, "nonincreasing": is_nonincreasing(pi).ok}


# -- sufficient gap condition ----------------------------------------------------------

def check_mhn_alpha(mu, nu, rho, tv_tol=1e-7):
    """Check the alpha_rho gap conditions and, when they hold, confirm that the
    monotone couplings are the LP optimizers of the predicted senses."""
    rho = float(rho)
    if not rho > 1 or rho == 2.0:
        raise DomainError(f"check_mhn_alpha needs rho in (1, 2) or rho > 2, got {rho!r}")
    xl, xh = float(mu.atoms[0]), float(mu.atoms[-1])
    inside = (nu.atoms > xl) & (nu.atoms < xh)
    if np.any(inside):
        raise SupportShapeMismatch(f"nu has mass strictly between {xl!r} and {xh!r}")
    left = nu.atoms[nu.atoms <= xl]
    right = nu.atoms[nu.atoms >= xh]
    if left.size == 0 or right.size == 0:
        raise SupportShapeMismatch("nu must have atoms on both sides of the support of mu")
    yl, yh = float(left[0]), float(left[-1])
    zl, zh = float(right[0]), float(right[-1])
    a = alpha_rho(rho).alpha
    g1 = (xl - yh) - a * (zh - yh)
    g2 = (zl - xh) - a * (zl - yl)
    details = {"alpha": a, "y_lo": yl, "y_hi": yh, "x_lo": xl, "x_hi": xh, "z_lo": zl,
               "z_hi": zh, "left_margin": g1, "right_margin": g2}
    sufficient = g1 >= 0 and g2 >= 0 and yh < xl and xh < zl
    if sufficient:
        cost = CostSpec.power(rho)
        s_up, s_down = ("max", "min") if rho < 2 else ("min", "max")
        up, down = build_nested_pi_up(mu, nu), build_nested_pi_down(mu, nu)
        d_up = coupling_distance(solve_mot(mu, nu, cost, s_up).coupling, up)
        d_down = coupling_distance(solve_mot(mu, nu, cost, s_down).coupling, down)
        details.update({"up_sense": s_up, "up_tv": d_up, "up_optimal": d_up <= tv_tol,
                        "down_sense": s_down, "down_tv": d_down,
                        "down_optimal": d_down <= tv_tol})
    return {"sufficient": bool(sufficient), "details": details}
