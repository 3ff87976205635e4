"""Cost tables, Gibbs kernels and the kernel integral operators.

The log-kernel ``-c`` is the source of truth. ``K = exp(-c)`` is only formed
when a caller asks for it; every operator here works with log-sum-exp.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_positive_values, check_table, check_vector, frozen
from .metric_measure import FiniteMetricSpace

ANALYTIC = "analytic"
DISCRETE = "discrete-estimate"


def seq_logsumexp(a, axis=-1, b=None):
    """``log sum(b * exp(a))`` along ``axis``, max-shifted, summed left to right.

    ``b`` (nonnegative, broadcast against ``a``) multiplies in linear space,
    so unit terms with weights summing to exactly 1 give exactly 0. Entries
    with ``b == 0`` or ``a == -inf`` contribute nothing; an empty slice
    returns ``-inf``.
    """
    a = np.asarray(a, dtype=np.float64)
    if b is None:
        b = np.ones_like(a)
    else:
        b = np.broadcast_to(np.asarray(b, dtype=np.float64), a.shape)
        a = np.where(b > 0, a, -np.inf)
    m = np.max(a, axis=axis, keepdims=True)
    m_safe = np.where(np.isfinite(m), m, 0.0)
    # cumsum accumulates in index order, unlike np.sum's pairwise reduction
    s = np.take(np.cumsum(b * np.exp(a - m_safe), axis=axis), -1, axis=axis)
    with np.errstate(divide="ignore"):
        return np.log(s) + np.squeeze(m_safe, axis=axis)


@dataclass(frozen=True, eq=False)
class KernelTable:
    """Gibbs kernel ``K[i, j] = exp(-c[i, j])``, stored through its log."""

    log_kernel: np.ndarray
    sup_norm: float

    @property
    def values(self):
        return np.exp(self.log_kernel)

    @property
    def shape(self):
        return self.log_kernel.shape


@dataclass(frozen=True, eq=False)
class CostModel:
    """Cost ``c[i, j]`` between X-point i and Y-point j.

    ``lip_const`` is a Lipschitz constant of the cost w.r.t. the sum metric
    on X x Y. ``lip_provenance`` is ``"analytic"`` when it is a proven upper
    bound and ``"discrete-estimate"`` when it is the grid estimate, which may
    undershoot the continuum constant.
    """

    table: np.ndarray = field(repr=False)
    space_x: FiniteMetricSpace = field(repr=False)
    space_y: FiniteMetricSpace = field(repr=False)
    lip_const: float = None
    lip_provenance: str = None

    def __post_init__(self):
        t = check_table(self.table, "cost table", (self.space_x.n_points, self.space_y.n_points))
        object.__setattr__(self, "table", frozen(t))
        if self.lip_const is None:
            try:
                lip = discrete_lipschitz(self)
            except ValueError:
                lip = 0.0  # single grid point: any constant works
            object.__setattr__(self, "lip_const", lip)
            object.__setattr__(self, "lip_provenance", DISCRETE)
        else:
            if not np.isfinite(self.lip_const) or self.lip_const < 0:
                raise ValueError(f"lip_const must be finite and >= 0, got {self.lip_const}")
            object.__setattr__(self, "lip_const", float(self.lip_const))
            if self.lip_provenance is None:
                object.__setattr__(self, "lip_provenance", ANALYTIC)
        if self.lip_provenance not in (ANALYTIC, DISCRETE):
            raise ValueError(f"unknown Lipschitz provenance {self.lip_provenance!r}")

    @property
    def sup_norm(self):
        return float(np.abs(self.table).max())

    @property
    def shape(self):
        return self.table.shape

    def kernel(self):
        return KernelTable(log_kernel=frozen(-self.table), sup_norm=self.sup_norm)

    def with_lipschitz(self, lip_const, provenance=ANALYTIC):
        return CostModel(self.table, self.space_x, self.space_y, lip_const, provenance)


def _check_epsilon(epsilon):
    epsilon = float(epsilon)
    if not epsilon > 0 or not np.isfinite(epsilon):
        raise ValueError(f"epsilon must be a positive finite number, got {epsilon}")
    return epsilon


def quadratic_cost(space_x, space_y, epsilon=1.0):
    """``c(x, y) = |x - y|^2 / epsilon`` on coordinate spaces.

    The analytic Lipschitz constant w.r.t. the Euclidean sum metric is
    ``2 (R_X + R_Y) / epsilon`` with ``R`` the largest point norm, from
    ``| |a|^2 - |b|^2 | <= |a - b| (|a| + |b|)`` applied to ``a = x - y``,
    ``b = x' - y'``.
    """
    epsilon = _check_epsilon(epsilon)
    if not (space_x.has_coordinates and space_y.has_coordinates):
        raise ValueError("quadratic cost needs coordinate-mode spaces")
    if space_x.points.shape[1] != space_y.points.shape[1]:
        raise ValueError("dimension mismatch between X and Y points")
    d = space_x.cross_distances(space_y)
    radius = np.linalg.norm(space_x.points, axis=1).max() + np.linalg.norm(space_y.points, axis=1).max()
    return CostModel(d**2 / epsilon, space_x, space_y, 2.0 * radius / epsilon, ANALYTIC)


def absolute_cost(space_x, space_y, epsilon=1.0):
    """``c(x, y) = d(x, y) / epsilon``; 1/epsilon-Lipschitz by the triangle inequality."""
    epsilon = _check_epsilon(epsilon)
    d = space_x.cross_distances(space_y)
    return CostModel(d / epsilon, space_x, space_y, 1.0 / epsilon, ANALYTIC)


def table_cost(space_x, space_y, table, lip_const=None):
    """Explicit cost table; Lipschitz constant estimated on the grid unless given."""
    return CostModel(np.asarray(table, dtype=np.float64), space_x, space_y, lip_const,
                     None if lip_const is None else ANALYTIC)


def discrete_lipschitz(cost):
    """Grid Lipschitz estimate of ``cost`` w.r.t. the sum metric.

    Max over distinct grid pairs p, q of ``|c(p) - c(q)| / d(p, q)``. This is
    a lower bound on the Lipschitz constant of any continuum extension.
    """
    c = cost.table
    dx, dy = cost.space_x.distances, cost.space_y.distances
    best = -1.0
    for i in range(c.shape[0]):
        # pairs ((i, j), (i', j')) for fixed i, all j, i', j'
        dist = dx[i][None, :, None] + dy[:, None, :]
        diff = np.abs(c[i][:, None, None] - c[None, :, :])
        mask = dist > 0
        if mask.any():
            best = max(best, float((diff[mask] / dist[mask]).max()))
    if best < 0:
        raise ValueError("all grid points coincide; Lipschitz ratio undefined")
    return best


def _log_apply(log_kernel, log_f, weights, axis):
    log_f = np.asarray(log_f, dtype=np.float64)
    if axis == 0:
        return seq_logsumexp(log_kernel + log_f[:, None], axis=0, b=weights[:, None])
    return seq_logsumexp(log_kernel + log_f[None, :], axis=1, b=weights[None, :])


def log_kernel_apply_x(kernel, log_f, pi0):
    """``log E^x_{pi0}(f)(y) = log sum_i K[i, y] f[i] pi0[i]`` from ``log f``."""
    return _log_apply(kernel.log_kernel, check_vector(log_f, "log_f", kernel.shape[0]),
                      pi0.weights, 0)


def log_kernel_apply_y(kernel, log_g, pi1):
    """``log E^y_{pi1}(g)(x) = log sum_j K[x, j] g[j] pi1[j]`` from ``log g``."""
    return _log_apply(kernel.log_kernel, check_vector(log_g, "log_g", kernel.shape[1]),
                      pi1.weights, 1)


def kernel_apply_x(kernel, f, pi0):
    """Integrate ``K(x, y) f(x)`` against ``pi0``: a positive function on Y."""
    f = check_positive_values(f, "f", kernel.shape[0])
    return np.exp(log_kernel_apply_x(kernel, np.log(f), pi0))


def kernel_apply_y(kernel, g, pi1):
    """Integrate ``K(x, y) g(y)`` against ``pi1``: a positive function on X."""
    g = check_positive_values(g, "g", kernel.shape[1])
    return np.exp(log_kernel_apply_y(kernel, np.log(g), pi1))
