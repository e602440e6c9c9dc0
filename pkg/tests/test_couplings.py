import numpy as np
import pytest

from mot1d import couplings as C
from mot1d.couplings import DirectionalSplit
from mot1d.errors import (Degenerate, EqualMeasures, InfeasibleSplit, NegativeReducedMeasure,
                          NoNestedSupports, NotConvexOrdered)
from mot1d.measures import DiscreteMeasure as D, positive_part
from mot1d.motlp import (Coupling, CostSpec, coupling_cost, coupling_distance, identity_coupling,
                         product_coupling, solve_mot, solve_mot_directional)
from mot1d.order import convex_order
from mot1d.pointmass import diagonal_floor
from mot1d.thresholds import gen_mhk, gen_mstar

from gen import disjoint_pair, nested_pair, random_concave, random_pair, random_vertex

PM1 = D([-1, 1], [0.5, 0.5])
POW1 = CostSpec.power(1.0)


def moving_part(pi):
    off = pi.x != pi.y
    return Coupling(None, None, pi.x[off], pi.y[off], pi.mass[off])


def alpha_pair(a):
    mu = D([-2, 0, 2], [1 / 3] * 3)
    if a == 0:
        return mu, D([-4, 0, 4], [1 / 3] * 3)
    return mu, D([-4, -1, 0, 1, 4], [(2 - a) / 6, a / 6, 2 / 6, a / 6, (2 - a) / 6])


def alpha_coupling(a):
    """The coupling of the example that does not weight (0, 0)."""
    mu, nu = alpha_pair(a)
    e = [(-2, -4, 1), (-2, 0, 1), (0, -4, 1 - a), (0, -1, a), (0, 1, a), (0, 4, 1 - a),
         (2, 0, 1), (2, 4, 1)]
    return Coupling.from_entries([(x, y, w / 6) for x, y, w in e if w > 0], mu, nu)


def alpha_coupling_diag(a):
    """The companion coupling with mass a/4 at (0, 0)."""
    mu, nu = alpha_pair(a)
    e = [(-2, -4, (4 - a) / 24), (2, 4, (4 - a) / 24), (-2, -1, a / 6), (2, 1, a / 6),
         (-2, 0, (4 - 3 * a) / 24), (0, -4, (4 - 3 * a) / 24), (0, 4, (4 - 3 * a) / 24),
         (2, 0, (4 - 3 * a) / 24), (0, 0, a / 4)]
    return Coupling.from_entries([t for t in e if t[2] > 0], mu, nu)


# -- decompose ---------------------------------------------------------------------

def test_decompose_examples():
    mu = D([-1, 0, 2], [0.2, 0.5, 0.3])
    sp = C.decompose(identity_coupling(mu))
    assert sp.nu_l.is_empty() and sp.nu_r.is_empty() and sp.nu_0 == mu
    sp = C.decompose(product_coupling(D.dirac(0.0), PM1))
    assert sp.nu_l == D.dirac(-1.0, 0.5) and sp.nu_r == D.dirac(1.0, 0.5) and sp.nu_0.is_empty()
    sp = C.decompose(alpha_coupling_diag(1.0))
    assert sp.nu_0.allclose(D.dirac(0.0, 0.25))
    assert sp.total().allclose(alpha_pair(1.0)[1], tol=1e-15)


# -- checkers ----------------------------------------------------------------------

def test_checker_examples():
    mu = D([-1, 0, 2], [0.2, 0.5, 0.3])
    assert C.is_nondecreasing(identity_coupling(mu)).ok
    assert not C.is_nonincreasing(identity_coupling(mu)).ok
    assert C.is_nonincreasing(identity_coupling(D.dirac(3.0))).ok
    for a in (0.0, 0.5, 1.0):
        assert C.is_nondecreasing(alpha_coupling(a)).ok
        assert C.is_nondecreasing(alpha_coupling_diag(a)).ok


def test_checker_witness_on_mstar():
    fam = gen_mstar(0.5, -3, -1, 2, 3, 1.8, 1.9, 1.5, verify=False)
    v = C.is_nondecreasing(fam.pi_over)
    assert not v.ok
    (x1, y1), (x2, y2) = v.witness
    assert x1 < x2
    assert not C.is_nonincreasing(fam.pi_over).ok
    assert not C.is_nondecreasing(fam.pi_under).ok and not C.is_nonincreasing(fam.pi_under).ok


def brute_monotone(pi, increasing):
    """Literal O(S^2) reading of conditions (a), (b) (or (c), (d))."""
    pts = list(zip(pi.x, pi.y))
    for x1, y1 in pts:
        for x2, y2 in pts:
            if not x1 < x2:
                continue
            if y1 <= x1 and y2 <= x2:  # two downward moves
                if increasing and y1 > y2:
                    return False
                if not increasing and y2 > y1:
                    return False
            if x1 <= y1 and x2 <= y2:  # two upward moves
                if increasing and y1 > y2:
                    return False
                if not increasing and y2 > y1:
                    return False
    return True


def test_checkers_match_quadratic_definition():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(1, 7))
        xs = rng.integers(-4, 5, n).astype(float)
        ys = rng.integers(-6, 7, n).astype(float)
        pi = Coupling(None, None, xs, ys, np.full(n, 1.0 / n))
        assert C.is_nondecreasing(pi).ok == brute_monotone(pi, True)
        assert C.is_nonincreasing(pi).ok == brute_monotone(pi, False)


# -- the non-decreasing constructor --------------------------------------------------

def test_build_nondecreasing_trivial():
    pi = C.build_nondecreasing(D.dirac(0.0), PM1, D.dirac(-1.0, 0.5), D.dirac(1.0, 0.5))
    assert coupling_distance(pi, product_coupling(D.dirac(0.0), PM1)) < 1e-15


@pytest.mark.parametrize("a", [0.0, 0.5, 1.0])
def test_build_nondecreasing_reproduces_example(a):
    mu, nu = alpha_pair(a)
    ref = alpha_coupling(a)
    sp = C.decompose(ref)
    if sp.nu_0.mass > 0:
        pi = C.build_nondecreasing_with_diagonal(mu, nu, sp)
    else:
        pi = C.build_nondecreasing(mu, nu, sp.nu_l, sp.nu_r)
    assert coupling_distance(pi, ref) < 1e-12


@pytest.mark.parametrize("a", [0.5, 1.0])
def test_with_diagonal_reproduces_example(a):
    mu, nu = alpha_pair(a)
    ref = alpha_coupling_diag(a)
    pi = C.build_nondecreasing_with_diagonal(mu, nu, C.decompose(ref))
    assert coupling_distance(pi, ref) < 1e-12


def test_with_diagonal_identity_and_errors():
    mu = D([-1, 0, 2], [0.2, 0.5, 0.3])
    pi = C.build_nondecreasing_with_diagonal(mu, mu, DirectionalSplit(D.empty(), mu, D.empty()))
    assert coupling_distance(pi, identity_coupling(mu)) < 1e-15
    mu, nu = alpha_pair(1.0)
    # diagonal mass at 1, where mu has no atom
    too_much = DirectionalSplit(D([-4, -1, 0], [1 / 6, 1 / 6, 1 / 3]), D([1.0], [1 / 6]),
                                D([4.0], [1 / 6]))
    with pytest.raises(NegativeReducedMeasure):
        C.build_nondecreasing_with_diagonal(mu, nu, too_much)


def test_build_nondecreasing_degenerate_and_infeasible():
    with pytest.raises(Degenerate):
        C.build_nondecreasing(D.dirac(0.0), PM1, PM1, D.empty())
    swapped = (D.dirac(1.0, 0.5), D.dirac(-1.0, 0.5))
    with pytest.raises(InfeasibleSplit):
        C.build_nondecreasing(D.dirac(0.0), PM1, *swapped)


def test_constructor_matches_directional_lp():
    rng = np.random.default_rng(1)
    for _ in range(40):
        mu, nu = random_pair(rng, n=int(rng.integers(2, 7)), stay=0.3)
        sp = C.decompose(random_vertex(mu, nu, rng, solve_mot))
        if sp.nu_0.mass > 0:
            # nu_0 goes back on the diagonal after the reduction, so it may sit
            # under an upward jump; only the moving part is monotone
            pi = C.build_nondecreasing_with_diagonal(mu, nu, sp)
            assert C.is_nondecreasing(moving_part(pi)).ok
        else:
            pi = C.build_nondecreasing(mu, nu, sp.nu_l, sp.nu_r)
            assert C.is_nondecreasing(pi).ok
        lp = solve_mot_directional(mu, nu, sp, POW1, "max")
        assert coupling_cost(pi, POW1) == pytest.approx(lp.value, rel=1e-8)
        assert coupling_distance(pi, lp.coupling) < 1e-7


def test_constructor_optimal_for_concave_costs():
    rng = np.random.default_rng(2)
    for _ in range(10):
        mu, nu = disjoint_pair(rng, n=4)
        sp = C.decompose(random_vertex(mu, nu, rng, solve_mot))
        pi = C.build_nondecreasing(mu, nu, sp.nu_l, sp.nu_r)
        for _ in range(5):
            phi = random_concave(rng)
            lp = solve_mot_directional(mu, nu, sp, phi, "max")
            assert coupling_cost(pi, phi) == pytest.approx(lp.value, rel=1e-8)


def test_diagonal_mass_bounded_off_touch_set():
    """Where the constructor keeps diagonal mass at a point with u_mu < u_nu,
    that mass is at most (mu ^ nu)({x})."""
    rng = np.random.default_rng(3)
    seen = 0
    for _ in range(40):
        mu, nu = random_pair(rng, n=5, stay=0.4)
        sp = C.decompose(random_vertex(mu, nu, rng, solve_mot))
        C.build_nondecreasing_with_diagonal(mu, nu, sp)
        for x, w in zip(sp.nu_0.atoms, sp.nu_0.weights):
            if nu.potential(x) > mu.potential(x) + 1e-10:
                seen += 1
                assert w <= min(mu.atom_weight(x), nu.atom_weight(x)) + 1e-12
    assert seen > 0


# -- nested supports -----------------------------------------------------------------

def test_detect_nested_examples():
    assert C.detect_nested_supports(D.dirac(0.0), PM1) == (0.0, 0.0)
    fam = gen_mhk(0.5, -4, -1, 0, 1, 2, 5)
    assert C.detect_nested_supports(fam.mu, fam.nu_under) == (0.0, 1.0)
    assert C.detect_nested_supports(PM1, PM1) == (-1.0, 1.0)
    assert C.detect_nested_supports(PM1, D([-2, 0, 2], [0.25, 0.5, 0.25])) is None


def test_nested_trivial():
    for fn in (C.build_nested_pi_down, C.build_nested_pi_up):
        pi = fn(D.dirac(0.0), PM1)
        assert coupling_distance(pi, product_coupling(D.dirac(0.0), PM1)) < 1e-15


def test_nested_mhk_closed_forms():
    fam = gen_mhk(0.5, -4, -1, 0, 1, 2, 5)
    up = C.build_nested_pi_up(fam.mu, fam.nu_under)
    assert coupling_distance(up, fam.pi_up) < 1e-12
    expect = {(0, -4): 1 / 6, (0, 2): 1 / 3, (1, -1): 1 / 3, (1, 5): 1 / 6}
    got = {(x, y): m for x, y, m in up.entries()}
    assert set(got) == set(expect)
    assert all(abs(got[k] - v) < 1e-12 for k, v in expect.items())
    down = C.build_nested_pi_down(fam.mu, fam.nu_over)
    assert coupling_distance(down, fam.pi_down) < 1e-12


def test_nested_random_against_lp():
    rng = np.random.default_rng(4)
    for _ in range(30):
        mu, nu = nested_pair(rng)
        a, b = C.detect_nested_supports(mu, nu)
        down = C.build_nested_pi_down(mu, nu)
        up = C.build_nested_pi_up(mu, nu)
        assert coupling_distance(down, solve_mot(mu, nu, POW1, "min").coupling) < 1e-8
        assert C.is_nonincreasing(down, exempt=(a, b)).ok
        assert C.is_nondecreasing(up).ok
        for x in {a, b}:
            want_down = min(mu.atom_weight(x), nu.atom_weight(x))
            assert C.decompose(down).nu_0.atom_weight(x) == pytest.approx(want_down, abs=1e-9)
            want_up = diagonal_floor(mu, nu, x)
            assert C.decompose(up).nu_0.atom_weight(x) == pytest.approx(want_up, abs=1e-9)


def test_nested_uniqueness_under_tie_breaking():
    rng = np.random.default_rng(5)
    for _ in range(5):
        mu, nu = nested_pair(rng)
        ref = C.build_nested_pi_up(mu, nu)
        X, Y = np.meshgrid(mu.atoms, nu.atoms, indexing="ij")
        base = np.abs(Y - X)
        for _ in range(10):
            pert = base + 1e-9 * rng.normal(size=base.shape)
            pi = solve_mot(mu, nu, pert, "max").coupling
            assert coupling_distance(pi, ref) < 1e-8


def test_nested_errors():
    with pytest.raises(NoNestedSupports):
        C.build_nested_pi_down(PM1, D([-2, 0, 2], [0.25, 0.5, 0.25]))
    with pytest.raises(NotConvexOrdered):
        C.build_nested_pi_up(PM1, D.dirac(0.0))


# -- dispersion ----------------------------------------------------------------------

def test_dispersion_examples():
    fam = gen_mhk(0.5, -4, -1, 0, 1, 2, 5)
    assert C.detect_dispersion(fam.mu, fam.nu_under) == (0.0, 1.0)
    assert C.detect_dispersion(PM1, D([-2, -1, 1, 2], [0.25] * 4)) == (-1.0, 1.0)
    assert C.detect_dispersion(D([-1, 1], [0.5, 0.5]), D([-2, 0, 2], [0.25, 0.5, 0.25])) is None


def test_dispersion_equivalence():
    rng = np.random.default_rng(6)
    hits = misses = 0
    for _ in range(60):
        mu, nu = random_pair(rng, n=int(rng.integers(2, 5)), stay=0.5, max_reach=3)
        ab = C.detect_dispersion(mu, nu)
        excess, deficit = positive_part(mu, nu), positive_part(nu, mu)
        assert (ab is None) == (C.detect_nested_supports(excess, deficit) is None)
        if ab is None:
            misses += 1
            with pytest.raises(NoNestedSupports):
                C.build_dispersion_coupling(mu, nu)
            continue
        hits += 1
        pi = C.build_dispersion_coupling(mu, nu)
        assert pi.is_martingale_coupling()
        assert C.is_nonincreasing(moving_part(pi)).ok
        sp = C.decompose(pi)
        want = C.dispersion_split(mu, nu)
        assert sp.nu_l.allclose(want.nu_l, 1e-12) and sp.nu_r.allclose(want.nu_r, 1e-12)
    assert hits and misses


# -- squared displacement ------------------------------------------------------------

def test_sq_pushforward_examples():
    mu = D([-1, 0, 2], [0.2, 0.5, 0.3])
    assert C.sq_pushforward(identity_coupling(mu)) == D.dirac(0.0)
    a = 1.5
    ents = []
    for x, w in zip(mu.atoms, mu.weights):
        ents += [(x, x - a, w / 2), (x, x + a, w / 2)]
    sq = C.sq_pushforward(Coupling.from_entries(ents))
    assert len(sq) == 1 and sq.atoms[0] == pytest.approx(a * a)


def test_sq_mean_identity_random():
    rng = np.random.default_rng(7)
    for _ in range(20):
        mu, nu = random_pair(rng)
        pi = random_vertex(mu, nu, rng, solve_mot)
        assert C.sq_pushforward(pi).mean() == pytest.approx(nu.moment(2) - mu.moment(2), rel=1e-9)


def test_sq_upper_bound():
    eta = C.sq_upper_bound(D.dirac(0.0), PM1)
    assert convex_order(D.dirac(1.0), eta).holds
    assert eta.mean() == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(EqualMeasures):
        C.sq_upper_bound(PM1, PM1)
    rng = np.random.default_rng(8)
    for _ in range(30):
        mu, nu = random_pair(rng)
        eta = C.sq_upper_bound(mu, nu)
        assert eta.mean() == pytest.approx(nu.moment(2) - mu.moment(2), abs=1e-10 * eta.scale())
        for _ in range(5):
            sq = C.sq_pushforward(random_vertex(mu, nu, rng, solve_mot))
            assert convex_order(sq, eta, tol=1e-10).holds
