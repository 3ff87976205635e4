"""Exact Wasserstein-1 distances between finitely supported measures.

The solver is a transportation network simplex on the bipartite support
graph. It shares no code with the Sinkhorn machinery, so it can serve as the
oracle for the stability checks.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._network_simplex import OPTIMAL, transport_simplex
from .metric_measure import product_metric

#: atoms lighter than this are dropped before building the flow graph
PRUNE_MASS = 1e-15
#: refuse bipartite graphs with more edges than this
MAX_EDGES = 10**6
_MAX_DENOMINATOR = 2**20
_MAX_SCALE = 2**40
_CS_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """Optimal plan; ``flow[i, j]`` is mass sent from atom i of mu to atom j of nu."""

    flow: np.ndarray = field(repr=False)
    total_cost: float
    row_potential: np.ndarray = field(repr=False)
    col_potential: np.ndarray = field(repr=False)
    pivots: int = 0
    exact: bool = False


def _integer_scale(a, b):
    """Common denominator turning both weight vectors into integers, or None."""
    fracs = []
    for w in np.concatenate([a, b]):
        fr = Fraction(float(w)).limit_denominator(_MAX_DENOMINATOR)
        if float(fr) != w:
            return None
        fracs.append(fr)
    scale = 1
    for fr in fracs:
        scale = scale * fr.denominator // math.gcd(scale, fr.denominator)
        if scale > _MAX_SCALE:
            return None
    ints = [fr.numerator * (scale // fr.denominator) for fr in fracs]
    ia, ib = ints[: len(a)], ints[len(a):]
    if sum(ia) != sum(ib):
        return None
    return scale, np.array(ia, dtype=np.float64), np.array(ib, dtype=np.float64)


def solve_transport(a, b, cost, max_pivots=None):
    """Exact min-cost transport between weight vectors ``a`` and ``b``.

    Weights that are exact rationals with a small common denominator are
    scaled to integers first, which makes every flow exact. The result's
    optimality is verified by complementary slackness.

    Returns
    -------
    TransportPlan
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    m, n = a.shape[0], b.shape[0]
    if cost.shape != (m, n):
        raise ValueError(f"cost has shape {cost.shape}, expected {(m, n)}")
    if m == 0 or n == 0:
        raise ValueError("both measures need at least one atom")
    if m * n > MAX_EDGES:
        raise ValueError(f"bipartite graph has {m * n} edges, above the desk-scale cap {MAX_EDGES}")
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("weights must be nonnegative")
    if not math.isclose(a.sum(), b.sum(), rel_tol=1e-9):
        raise ValueError(f"total masses differ: {a.sum()!r} vs {b.sum()!r}")

    scaled = _integer_scale(a, b)
    if scaled is not None:
        scale, sa, sb = scaled
    else:
        scale, sa, sb = 1, a, b

    cmax = float(np.abs(cost).max())
    tol = 1e-12 * max(1.0, cmax)
    if max_pivots is None:
        max_pivots = 50 * (m + n) * max(m, n) + 1000
    bi, bj, x, pot, status, pivots = transport_simplex(sa, sb, cost, tol, max_pivots)
    if status != OPTIMAL:
        raise RuntimeError(f"network simplex hit the pivot cap ({pivots}) without reaching optimality")

    x = np.maximum(x, 0.0)
    flow = np.zeros((m, n))
    np.add.at(flow, (bi, bj), x)
    u, v = pot[:m], pot[m:]
    reduced = cost - u[:, None] - v[None, :]
    if reduced.min() < -_CS_RTOL * max(1.0, cmax):
        raise RuntimeError("complementary slackness check failed: negative reduced cost")
    total = float(np.sum(x * cost[bi, bj]))
    if scale != 1:
        flow /= scale
        total /= scale
    return TransportPlan(flow=flow, total_cost=total, row_potential=u, col_potential=v,
                         pivots=int(pivots), exact=scaled is not None)


def _solve_pruned(a, b, dist):
    ia = np.flatnonzero(a >= PRUNE_MASS)
    ib = np.flatnonzero(b >= PRUNE_MASS)
    plan = solve_transport(a[ia], b[ib], dist[np.ix_(ia, ib)])
    flow = np.zeros((a.shape[0], b.shape[0]))
    flow[np.ix_(ia, ib)] = plan.flow
    return max(plan.total_cost, 0.0), TransportPlan(
        flow=flow, total_cost=plan.total_cost, row_potential=plan.row_potential,
        col_potential=plan.col_potential, pivots=plan.pivots, exact=plan.exact)


def wasserstein1(mu, nu, metric=None):
    """W1 between two discrete measures.

    Parameters
    ----------
    mu, nu : DiscreteMeasure
    metric : array of shape (mu.n_points, nu.n_points), optional
        Ground distances between the two supports. Defaults to the metric of
        the shared space, or Euclidean distance for two coordinate spaces.

    Returns
    -------
    value : float
    plan : TransportPlan
        Flow indexed by the full (unpruned) point sets.
    """
    dist = mu.space.cross_distances(nu.space) if metric is None else np.asarray(metric, float)
    if dist.shape != (mu.n_points, nu.n_points):
        raise ValueError(f"metric has shape {dist.shape}, expected {(mu.n_points, nu.n_points)}")
    return _solve_pruned(mu.weights, nu.weights, dist)


def wasserstein1_grid(p, q, dist_x, dist_y):
    """W1 between two joint tables on the same X x Y grid under the sum metric."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"coupling shapes differ: {p.shape} vs {q.shape}")
    d = product_metric(dist_x, dist_y)
    return _solve_pruned(p.ravel(), q.ravel(), d)[0]


def wasserstein1_coupling(P, Q):
    """W1 between two couplings on the same spaces, with d = d_X + d_Y."""
    if not (P.space_x.same_as(Q.space_x) and P.space_y.same_as(Q.space_y)):
        raise ValueError("couplings live on different spaces")
    return wasserstein1_grid(P.table, Q.table, P.space_x.distances, P.space_y.distances)
