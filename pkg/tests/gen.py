"""Random instance generators shared by the test modules."""

import numpy as np

from mot1d.measures import DiscreteMeasure
from mot1d.motlp import CostSpec


def _measure(d):
    ks = sorted(d)
    return DiscreteMeasure(ks, [d[k] for k in ks])


def spread(mu, rng, max_reach=5, stay=0.0):
    """nu = law of Y where Y | X = x is a two-point split around x (a martingale
    kernel), optionally leaving a fraction ``stay`` at x."""
    out = {}
    for x, w in zip(mu.atoms, mu.weights):
        if stay > 0 and rng.random() < 0.5:
            out[x] = out.get(x, 0.0) + w * stay
            w = w * (1 - stay)
        a = float(rng.integers(1, max_reach + 1))
        b = float(rng.integers(1, max_reach + 1))
        t = b / (a + b)
        out[x - a] = out.get(x - a, 0.0) + w * t
        out[x + b] = out.get(x + b, 0.0) + w * (1 - t)
    return _measure(out)


def random_mu(rng, n=5, lo=-8, hi=8):
    xs = np.sort(rng.choice(np.arange(lo, hi + 1), size=n, replace=False)).astype(float)
    return DiscreteMeasure(xs, rng.dirichlet(np.ones(n)))


def random_pair(rng, n=5, stay=0.0, max_reach=5):
    """mu <=cx nu on integer atoms."""
    mu = random_mu(rng, n)
    return mu, spread(mu, rng, max_reach, stay)


def disjoint_pair(rng, n=5):
    """mu on even integers, nu on odd integers: no shared atoms, so nu_0 = 0."""
    xs = 2.0 * np.sort(rng.choice(np.arange(-5, 6), size=n, replace=False))
    mu = DiscreteMeasure(xs, rng.dirichlet(np.ones(n)))
    out = {}
    for x, w in zip(mu.atoms, mu.weights):
        a = 2.0 * rng.integers(0, 3) + 1
        b = 2.0 * rng.integers(0, 3) + 1
        t = b / (a + b)
        out[x - a] = out.get(x - a, 0.0) + w * t
        out[x + b] = out.get(x + b, 0.0) + w * (1 - t)
    return mu, _measure(out)


def nested_pair(rng):
    """mu on [a, b], nu outside (a, b), possibly with atoms at a and b."""
    a = float(rng.integers(-5, 1))
    b = a + float(rng.integers(1, 5))
    xs = np.unique(np.concatenate(([a, b], rng.integers(a, b + 1, 3).astype(float))))
    w = rng.dirichlet(np.ones(len(xs)))
    mu = DiscreteMeasure(xs, w)
    out = {}
    for x, wi in zip(xs, w):
        if x in (a, b) and rng.random() < 0.3:
            out[x] = out.get(x, 0.0) + 0.3 * wi
            wi *= 0.7
        lo = a - float(rng.integers(0, 4))
        hi = b + float(rng.integers(0, 4))
        if lo == x:
            lo = a - 1
        if hi == x:
            hi = b + 1
        t = (hi - x) / (hi - lo)
        out[lo] = out.get(lo, 0.0) + wi * t
        out[hi] = out.get(hi, 0.0) + wi * (1 - t)
    return mu, _measure(out)


def non_nested_pair(rng):
    """mu <=cx nu with nu charging the open hull of supp(mu)."""
    while True:
        mu, nu = random_pair(rng, n=int(rng.integers(2, 5)), max_reach=4)
        a, b = mu.atoms[0], mu.atoms[-1]
        if np.any((nu.atoms > a) & (nu.atoms < b)):
            return mu, nu


def random_concave(rng, k=4):
    """Increasing concave piecewise-linear phi with phi(0) = 0."""
    knots = np.concatenate(([0.0], np.sort(rng.uniform(0.2, 12.0, k))))
    knots = np.unique(np.round(knots, 6))
    slopes = np.sort(rng.uniform(0.05, 2.0, knots.size - 1))[::-1]
    values = np.concatenate(([0.0], np.cumsum(slopes * np.diff(knots))))
    return CostSpec.table(knots, values)


def random_vertex(mu, nu, rng, solve):
    """An LP vertex of the martingale polytope: optimum of a random linear cost."""
    C = rng.normal(size=(len(mu), len(nu)))
    return solve(mu, nu, C, "min").coupling
