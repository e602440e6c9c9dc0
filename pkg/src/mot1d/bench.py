"""Empirical comparison of M_rho against the rho = 1 maximizer pi_HN.

For a pair (mu, nu) we build centred empirical measures (or exact shifted
pmfs), replace nu by the convex-order join with mu, take pi_HN as the LP
maximizer of |y - x|, and for every rho solve the LP in the sense where the
monotone coupling is expected to be optimal: Max for rho < 2, Min for rho > 2.
"""

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import ndtri

from .couplings import is_nondecreasing
from .errors import BadParams
from .measures import empirical, exact_pmf
from .motlp import CostSpec, coupling_cost, coupling_distance, solve_mot
from .order import convex_join

DEFAULT_RHOS = (0.3, 0.7, 1.0, 1.4, 1.9, 2.1, 2.3, 2.5, 3.0, 5.0)

# (mu law, nu law) per benchmark pair; shifts centre the exact pmfs
PAIRS = {
    "normal": (("normal", {"loc": 0.0, "sd": 0.24}), ("normal", {"loc": 0.0, "sd": 0.28})),
    "lognormal": (("lognormal", {"loc": 0.0, "sd": 0.24}),
                  ("lognormal", {"loc": -0.0104, "sd": 0.28})),
    # E(m) read as mean m: the rate reading would put nu below mu in convex order
    "exponential": (("exponential", {"mean": 0.5, "shift": -1.0}),
                    ("exponential", {"mean": 1.0, "shift": -2.0})),
    "binomial": (("binomial", {"n": 10, "p": 0.5, "shift": -5.0}),
                 ("binomial", {"n": 40, "p": 0.5, "shift": -20.0})),
    "poisson": (("poisson", {"lam": 1.0, "shift": -1.0}),
                ("poisson", {"lam": 4.0, "shift": -4.0})),
}
DISCRETE = ("binomial", "poisson")


@dataclass(frozen=True)
class BenchConfig:
    pair: str = "normal"
    n_mu: int = 100
    n_nu: int = 100
    rhos: tuple = DEFAULT_RHOS
    seed: int = 0
    mode: str = "sample"
    norm: str = "tv"
    workers: int = 1

    def validate(self):
        if self.pair not in PAIRS:
            raise BadParams(f"unknown pair {self.pair!r}; choose from {sorted(PAIRS)}")
        if self.mode not in ("sample", "exact_pmf"):
            raise BadParams("mode must be 'sample' or 'exact_pmf'")
        if self.mode == "exact_pmf" and self.pair not in DISCRETE:
            raise BadParams("exact_pmf mode is available for binomial and poisson only")
        if self.n_mu < 2 or self.n_nu < 2:
            raise BadParams("sample sizes must be at least 2")
        if not self.rhos or any(not r > 0 for r in self.rhos):
            raise BadParams("rho values must be positive")
        if self.norm.lower() not in ("tv", "frobenius", "fro"):
            raise BadParams(f"unknown norm {self.norm!r}")
        return self


@dataclass(frozen=True)
class BenchRow:
    rho: float
    sense: str
    opt_value: float
    i_hn: float
    rel_gap: float
    coupling_distance: float
    nondecreasing: bool = None


@dataclass
class BenchTable:
    config: BenchConfig
    rows: list
    meta: dict = field(default_factory=dict)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rho", "sense", "opt_value", "i_hn", "rel_gap", "coupling_distance"])
        for r in self.rows:
            w.writerow([_f(r.rho), r.sense, _f(r.opt_value), _f(r.i_hn), _f(r.rel_gap),
                        _f(r.coupling_distance)])
        return buf.getvalue()

    def to_dict(self):
        cfg = asdict(self.config)
        cfg["rhos"] = list(cfg["rhos"])
        return {"config": cfg, "meta": self.meta, "rows": [asdict(r) for r in self.rows]}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def _f(v):
    return format(float(v), ".17g")


# -- sampling ------------------------------------------------------------------------

def _uniforms(rng, n):
    """n draws strictly inside (0, 1): midpoints of a 2^53 grid."""
    return (rng.integers(0, 2 ** 53, size=n).astype(float) + 0.5) / 2.0 ** 53


def sample(law, params, n, rng):
    """Inverse-CDF draws from one of the five families."""
    u = _uniforms(rng, n)
    shift = params.get("shift", 0.0)
    if law == "normal":
        return params["loc"] + params["sd"] * ndtri(u) + shift
    if law == "lognormal":
        return np.exp(params["loc"] + params["sd"] * ndtri(u)) + shift
    if law == "exponential":
        return -np.log1p(-u) * params["mean"] + shift
    if law in DISCRETE:
        pmf = exact_pmf(law, 0.0, **{k: v for k, v in params.items() if k != "shift"})
        idx = np.searchsorted(pmf.cumulative[1:], u * pmf.mass, side="left")
        return pmf.atoms[np.minimum(idx, len(pmf) - 1)] + shift
    raise BadParams(f"unknown law {law!r}")


def build_measures(cfg):
    (lm, pm), (ln, pn) = PAIRS[cfg.pair]
    if cfg.mode == "exact_pmf":
        strip = lambda p: {k: v for k, v in p.items() if k != "shift"}  # noqa: E731
        return (exact_pmf(lm, pm["shift"], **strip(pm)), exact_pmf(ln, pn["shift"], **strip(pn)))
    rng = np.random.default_rng(cfg.seed)
    xs = sample(lm, pm, cfg.n_mu, rng)
    ys = sample(ln, pn, cfg.n_nu, rng)
    return empirical(xs), empirical(ys)


# -- run -----------------------------------------------------------------------------

def _row(args):
    mu, target, hn, rho, norm = args
    sense = "max" if rho <= 2 else "min"
    cost = CostSpec.power(rho)
    rep = solve_mot(mu, target, cost, sense, check_order=False)
    i_hn = coupling_cost(hn, cost)
    gap = abs(rep.value - i_hn) / max(abs(rep.value), 1e-300)
    mono = is_nondecreasing(rep.coupling).ok if rho <= 1 else None
    return BenchRow(float(rho), sense, rep.value, i_hn, gap,
                    coupling_distance(rep.coupling, hn, norm), mono)


def run_bench(cfg):
    cfg.validate()
    t0 = time.perf_counter()
    mu, nu = build_measures(cfg)
    target = convex_join(mu, nu)
    hn = solve_mot(mu, target, CostSpec.power(1.0), "max").coupling
    jobs = [(mu, target, hn, float(r), cfg.norm) for r in cfg.rhos]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            rows = list(ex.map(_row, jobs))
    else:
        rows = [_row(j) for j in jobs]
    meta = {"mu_atoms": len(mu), "nu_atoms": len(nu), "join_atoms": len(target),
            "seconds": time.perf_counter() - t0}
    return BenchTable(cfg, rows, meta)
