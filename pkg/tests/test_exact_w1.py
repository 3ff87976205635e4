import math
from fractions import Fraction

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.optimize import linprog

from instances import random_measure, random_space
from ipfplab import DiscreteMeasure, FiniteMetricSpace, solve_transport, wasserstein1
from ipfplab.exact_w1 import MAX_EDGES, wasserstein1_coupling, wasserstein1_grid
from ipfplab.ipfp_core import Coupling
from lp_oracle import transport_lp_bruteforce

LINE = FiniteMetricSpace.from_points([[0.0], [1.0]])


def rational_instance(rng):
    m, n = (int(v) for v in rng.integers(1, 5, size=2))
    xs = rng.integers(0, 8, size=m).astype(float)
    ys = rng.integers(0, 8, size=n).astype(float)
    ca = rng.integers(1, 7, size=m)
    cb = rng.integers(1, 7, size=n)
    a = [Fraction(int(c), int(ca.sum())) for c in ca]
    b = [Fraction(int(c), int(cb.sum())) for c in cb]
    cost = np.abs(xs[:, None] - ys[None, :])
    return a, b, cost


def test_trivial_examples():
    mu = DiscreteMeasure(LINE, [0.5, 0.5])
    assert wasserstein1(mu, mu)[0] == 0.0
    d0, d1 = DiscreteMeasure(LINE, [1.0, 0.0]), DiscreteMeasure(LINE, [0.0, 1.0])
    assert wasserstein1(d0, d1)[0] == 1.0
    assert wasserstein1(mu, d0)[0] == 0.5


def test_matches_lp_enumeration_exactly():
    # the acceptance gate runs the full 200 cases
    rng = np.random.default_rng(7)
    for _ in range(50):
        a, b, cost = rational_instance(rng)
        oracle = transport_lp_bruteforce(a, b, cost.tolist())
        plan = solve_transport([float(x) for x in a], [float(x) for x in b], cost)
        assert plan.exact
        assert plan.total_cost == float(oracle)
        flow = sum(Fraction(q).limit_denominator(10**6) * Fraction(c)
                   for q, c in zip(plan.flow.ravel(), cost.ravel()))
        assert flow == oracle


def test_plan_invariants():
    rng = np.random.default_rng(8)
    for _ in range(30):
        sx, sy = random_space(rng, int(rng.integers(1, 15)), 2), random_space(rng, int(rng.integers(1, 15)), 2)
        mu, nu = random_measure(rng, sx), random_measure(rng, sy)
        value, plan = wasserstein1(mu, nu)
        assert_allclose(plan.flow.sum(axis=1), mu.weights, atol=1e-10)
        assert_allclose(plan.flow.sum(axis=0), nu.weights, atol=1e-10)
        assert plan.flow.min() >= 0
        assert abs(plan.total_cost - np.sum(plan.flow * sx.cross_distances(sy))) <= 1e-10
        assert value >= 0


def test_matches_highs_on_larger_instances():
    rng = np.random.default_rng(9)
    for _ in range(10):
        m, n = (int(v) for v in rng.integers(5, 40, size=2))
        a, b = rng.dirichlet(np.ones(m)), rng.dirichlet(np.ones(n))
        cost = rng.uniform(0, 3, size=(m, n))
        A = np.vstack([np.kron(np.eye(m), np.ones(n)), np.kron(np.ones(m), np.eye(n))])
        ref = linprog(cost.ravel(), A_eq=A, b_eq=np.concatenate([a, b]), method="highs")
        assert solve_transport(a, b, cost).total_cost == pytest.approx(ref.fun, abs=1e-9)


def test_metric_axioms():
    rng = np.random.default_rng(10)
    for _ in range(30):
        sp = random_space(rng, int(rng.integers(2, 10)), 2)
        mu, nu, rho = (random_measure(rng, sp) for _ in range(3))
        d_mn, d_nm = wasserstein1(mu, nu)[0], wasserstein1(nu, mu)[0]
        assert abs(d_mn - d_nm) <= 1e-10
        assert wasserstein1(mu, mu)[0] == 0.0
        assert d_mn <= wasserstein1(mu, rho)[0] + wasserstein1(rho, nu)[0] + 1e-9


def test_coupling_distance_dominates_marginal_distances():
    rng = np.random.default_rng(11)
    for _ in range(20):
        sx, sy = random_space(rng, 4, 1), random_space(rng, 3, 1)
        P = Coupling(rng.dirichlet(np.ones(12)).reshape(4, 3), 1, sx, sy)
        Q = Coupling(rng.dirichlet(np.ones(12)).reshape(4, 3), 1, sx, sy)
        w = wasserstein1_coupling(P, Q)
        wx = wasserstein1(DiscreteMeasure(sx, P.marginal(0)), DiscreteMeasure(sx, Q.marginal(0)))[0]
        wy = wasserstein1(DiscreteMeasure(sy, P.marginal(1)), DiscreteMeasure(sy, Q.marginal(1)))[0]
        assert w >= max(wx, wy) - 1e-9


def test_product_subadditivity():
    rng = np.random.default_rng(12)
    for _ in range(20):
        sx, sy = random_space(rng, 5, 2), random_space(rng, 4, 2)
        a, ah = random_measure(rng, sx), random_measure(rng, sx)
        b, bh = random_measure(rng, sy), random_measure(rng, sy)
        w = wasserstein1_grid(np.outer(a.weights, b.weights), np.outer(ah.weights, bh.weights),
                              sx.distances, sy.distances)
        assert w <= wasserstein1(a, ah)[0] + wasserstein1(b, bh)[0] + 1e-9


def test_product_with_matched_second_factor():
    sx = FiniteMetricSpace.from_points([[0.0], [1.0], [2.5]])
    sy = FiniteMetricSpace.from_points([[0.0], [3.0]])
    a, ah = DiscreteMeasure(sx, [0.2, 0.5, 0.3]), DiscreteMeasure(sx, [0.6, 0.1, 0.3])
    b = DiscreteMeasure(sy, [0.25, 0.75])
    P = Coupling(np.outer(a.weights, b.weights), 2, sx, sy)
    Q = Coupling(np.outer(ah.weights, b.weights), 2, sx, sy)
    assert wasserstein1_coupling(P, Q) == pytest.approx(wasserstein1(a, ah)[0], abs=1e-12)
    assert wasserstein1(a, ah)[0] == pytest.approx(0.4, abs=1e-12)


def test_coupling_of_self_is_zero():
    rng = np.random.default_rng(13)
    sx, sy = random_space(rng, 3, 1), random_space(rng, 3, 1)
    P = Coupling(rng.dirichlet(np.ones(9)).reshape(3, 3), 1, sx, sy)
    assert wasserstein1_coupling(P, P) == 0.0


def test_pruning_ignores_dust():
    sp = FiniteMetricSpace.from_points([[0.0], [1.0], [5.0]])
    mu = DiscreteMeasure(sp, [0.5, 0.5, 0.0])
    nu = DiscreteMeasure(sp, [0.0, 1.0, 0.0])
    value, plan = wasserstein1(mu, nu)
    assert value == 0.5
    assert plan.flow.shape == (3, 3)


def test_input_errors():
    with pytest.raises(ValueError, match="total masses"):
        solve_transport([0.5, 0.5], [0.7], [[1.0], [2.0]])
    with pytest.raises(ValueError, match="shape"):
        solve_transport([1.0], [1.0], [[1.0, 2.0]])
    with pytest.raises(ValueError, match="nonnegative"):
        solve_transport([1.5, -0.5], [1.0], [[1.0], [2.0]])
    n = int(math.isqrt(MAX_EDGES)) + 1
    with pytest.raises(ValueError, match="desk-scale"):
        solve_transport(np.full(n, 1 / n), np.full(n, 1 / n), np.zeros((n, n)))


def test_irrational_weights_still_optimal():
    a = np.array([1 / math.pi, 1 - 1 / math.pi])
    b = np.array([math.sqrt(2) / 2, 1 - math.sqrt(2) / 2])
    plan = solve_transport(a, b, [[0.0, 1.0], [1.0, 0.0]])
    assert not plan.exact
    assert plan.total_cost == pytest.approx(abs(a[0] - b[0]), abs=1e-15)
