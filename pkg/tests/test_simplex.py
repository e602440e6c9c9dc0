import numpy as np
import pytest
import scipy.sparse as sp

from mot1d import simplex
from mot1d.errors import BadParams
from mot1d.measures import DiscreteMeasure as D
from mot1d.motlp import CostSpec, _cost_matrix, build_lp

from oracles import brute_force_lp, exact_lp, highs_lp, random_lp


def test_single_variable():
    sol = simplex.solve(simplex.LinearProgram([1.0], [[1.0]], [1.0]), "min")
    assert sol.optimal and sol.value == pytest.approx(1.0)


def test_transport_identity_and_swap():
    mu = D([0, 2], [0.5, 0.5])
    C = _cost_matrix(mu, mu, CostSpec.power(1))
    lp = build_lp(mu, mu, C)
    assert simplex.solve(lp, "min").value == pytest.approx(0.0, abs=1e-12)
    # with the martingale rows the only coupling of mu with itself is the identity
    rows = sp.csr_matrix(lp.A)[[0, 1, 4]]  # row sums and the last column sum
    plain = simplex.LinearProgram(lp.c, rows, lp.b[[0, 1, 4]])
    assert simplex.solve(plain, "max").value == pytest.approx(2.0)


@pytest.mark.parametrize("seed", range(20))
def test_random_lp_matches_rational_oracles(seed):
    rng = np.random.default_rng(seed)
    lp = random_lp(rng, m=3, n=int(rng.integers(5, 9)))
    for sense in ("min", "max"):
        sol = simplex.solve(lp, sense)
        ex = exact_lp(lp, sense)
        bf = brute_force_lp(lp, sense)
        assert sol.optimal and ex.optimal
        assert float(ex.exact_value) == pytest.approx(float(bf), abs=1e-12)
        assert sol.value == pytest.approx(float(bf), abs=1e-9 * (1 + abs(float(bf))))


@pytest.mark.parametrize("seed", range(10))
def test_infeasible_detected(seed):
    rng = np.random.default_rng(100 + seed)
    lp = random_lp(rng, m=3, n=6, feasible=False)
    bf = brute_force_lp(lp, "min")
    sol = simplex.solve(lp, "min")
    assert (bf is None) == (sol.status == simplex.INFEASIBLE)


def test_redundant_rows_are_dropped():
    A = np.array([[1.0, 1.0, 0.0], [2.0, 2.0, 0.0], [0.0, 1.0, 1.0]])
    lp = simplex.LinearProgram([1.0, 2.0, 3.0], A, [1.0, 2.0, 1.0])
    sol = simplex.solve(lp, "min")
    assert sol.optimal
    assert sol.value == pytest.approx(float(brute_force_lp(lp, "min")))
    assert len(sol.dropped_rows) == 1


def test_unbounded():
    lp = simplex.LinearProgram([-1.0, 0.0], [[1.0, -1.0]], [0.0])
    assert simplex.solve(lp, "min").status == simplex.UNBOUNDED


def test_weak_duality_and_residuals():
    rng = np.random.default_rng(7)
    for _ in range(10):
        lp = random_lp(rng, m=4, n=8)
        for sense in ("min", "max"):
            sol = simplex.solve(lp, sense)
            dual = float(sol.duals @ lp.b)
            assert abs(sol.value - dual) <= 1e-9 * (1 + abs(sol.value))
            assert sol.max_residual <= 1e-9 * (1 + np.max(np.abs(lp.b)))
            assert np.all(sol.primal >= -1e-9)


def test_deterministic():
    rng = np.random.default_rng(3)
    mu = D(np.arange(6.0), rng.dirichlet(np.ones(6)))
    nu = D(np.arange(-3.0, 9.0), np.full(12, 1 / 12))
    mu = mu.shifted(nu.mean() - mu.mean())
    lp = build_lp(mu, nu, _cost_matrix(mu, nu, CostSpec.power(1.5)))
    a, b = simplex.solve(lp, "max"), simplex.solve(lp, "max")
    assert a.iterations == b.iterations
    assert np.array_equal(a.primal, b.primal)


def test_mot_lp_against_highs():
    rng = np.random.default_rng(11)
    from gen import random_pair
    for _ in range(10):
        mu, nu = random_pair(rng, n=6)
        for rho in (0.5, 1.0, 3.0):
            lp = build_lp(mu, nu, _cost_matrix(mu, nu, CostSpec.power(rho)))
            for sense in ("min", "max"):
                ours = simplex.solve(lp, sense).value
                ref = highs_lp(lp, sense)[0]
                assert ours == pytest.approx(ref, rel=1e-8, abs=1e-10)


def test_bad_input():
    with pytest.raises(BadParams):
        simplex.LinearProgram([1.0, 2.0], [[1.0]], [1.0])
    with pytest.raises(BadParams):
        simplex.solve(simplex.LinearProgram([1.0], [[1.0]], [1.0]), "sideways")
