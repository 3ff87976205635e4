"""Finite metric spaces, discrete probability measures and perturbations.

A :class:`FiniteMetricSpace` always materializes its full distance table; in
coordinate mode it also keeps the points so that distances *across* two
spaces (and costs such as ``|x - y|^2 / eps``) can be evaluated.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ._rng import stream
from ._validation import check_table, check_weights, frozen

logger = logging.getLogger(__name__)

#: table-mode spaces up to this size get the O(n^3) triangle check by default
TRIANGLE_CHECK_MAX_POINTS = 64
_TRIANGLE_ATOL = 1e-9

PERTURB_MODES = ("weight-jitter", "empirical-subsample", "point-jitter")


def _euclidean(a, b):
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """Finitely many points with a metric.

    Build with :meth:`from_points` (Euclidean) or :meth:`from_distances`.
    """

    distances: np.ndarray
    points: np.ndarray | None = None

    @classmethod
    def from_points(cls, points):
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        pts = check_table(pts, "points")
        return cls(distances=frozen(_euclidean(pts, pts)), points=frozen(pts))

    @classmethod
    def from_distances(cls, table, validate=None):
        d = check_table(table, "distances")
        n = d.shape[0]
        if d.shape != (n, n):
            raise ValueError(f"distance table must be square, got {d.shape}")
        if np.any(d < 0):
            raise ValueError("distances must be nonnegative")
        if np.any(np.diag(d) != 0):
            raise ValueError("distance table must have a zero diagonal")
        if not np.array_equal(d, d.T):
            raise ValueError("distance table must be symmetric")
        if validate is None:
            validate = n <= TRIANGLE_CHECK_MAX_POINTS
        if validate:
            for k in range(n):
                if np.any(d > d[:, k][:, None] + d[k, :][None, :] + _TRIANGLE_ATOL):
                    raise ValueError("distance table violates the triangle inequality")
        return cls(distances=frozen(d))

    @property
    def n_points(self):
        return self.distances.shape[0]

    @property
    def has_coordinates(self):
        return self.points is not None

    def cross_distances(self, other):
        """Distance table between the points of ``self`` (rows) and ``other``."""
        if other is self:
            return self.distances
        if self.has_coordinates and other.has_coordinates:
            if self.points.shape[1] != other.points.shape[1]:
                raise ValueError("coordinate dimensions differ across spaces")
            return _euclidean(self.points, other.points)
        if (not self.has_coordinates and not other.has_coordinates
                and np.array_equal(self.distances, other.distances)):
            return self.distances
        raise ValueError("metric undefined across the two supports")

    def same_as(self, other):
        if other is self:
            return True
        if self.has_coordinates != other.has_coordinates:
            return False
        if self.has_coordinates:
            return np.array_equal(self.points, other.points)
        return np.array_equal(self.distances, other.distances)


def diameter(space):
    """Largest pairwise distance; 0 for a single point."""
    return float(space.distances.max()) if space.n_points > 1 else 0.0


def product_metric(dx, dy):
    """Sum metric on X x Y.

    Scalars give ``dx + dy``. Square tables of shapes (n, n) and (m, m) give
    the (n*m, n*m) table of the grid, with pair (i, j) at flat index i*m + j.
    """
    dx = np.asarray(dx, dtype=np.float64)
    dy = np.asarray(dy, dtype=np.float64)
    if dx.ndim == 0 and dy.ndim == 0:
        return float(dx + dy)
    n, m = dx.shape[0], dy.shape[0]
    return (dx[:, None, :, None] + dy[None, :, None, :]).reshape(n * m, n * m)


def product_space(space_x, space_y):
    d = product_metric(space_x.distances, space_y.distances)
    return FiniteMetricSpace(distances=frozen(d))


def lipschitz_on_space(values, space):
    """Discrete Lipschitz constant max |v_i - v_j| / d(i, j) over d(i, j) > 0."""
    v = np.asarray(values, dtype=np.float64)
    d = space.distances
    mask = d > 0
    if not mask.any():
        return 0.0
    return float((np.abs(v[:, None] - v[None, :])[mask] / d[mask]).max())


def _snap_unit_sum(w):
    """Adjust one weight by a few ulps so the left-to-right sum is exactly 1.0.

    Degenerate cases (zero cost, unit densities) then come out exact rather
    than off by rounding. Candidates are tried from the last positive atom
    backwards; setting it to ``1 - (sum before it)`` is exact whenever that
    partial sum is at least 1/2.
    """
    w = np.array(w, dtype=np.float64)
    if w.size == 0 or float(np.cumsum(w)[-1]) == 1.0:
        return w
    for k in np.flatnonzero(w > 0)[::-1][:8]:
        trial = w.copy()
        for _ in range(3):
            gap = 1.0 - float(np.cumsum(trial)[-1])
            if gap == 0.0 or trial[k] + gap < 0:
                break
            trial[k] += gap
        if float(np.cumsum(trial)[-1]) == 1.0 and abs(trial[k] - w[k]) <= 1e-12:
            return trial
    return w


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Probability weights on the points of a :class:`FiniteMetricSpace`."""

    space: FiniteMetricSpace
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = _snap_unit_sum(check_weights(self.weights, self.space.n_points))
        object.__setattr__(self, "weights", frozen(w))

    @classmethod
    def uniform(cls, space):
        return cls(space, np.full(space.n_points, 1.0 / space.n_points))

    @classmethod
    def from_masses(cls, space, masses):
        """Normalize nonnegative ``masses`` into a probability measure."""
        return cls(space, check_weights(masses, space.n_points, normalize=True))

    @property
    def n_points(self):
        return self.space.n_points

    def support(self):
        return np.flatnonzero(self.weights > 0)

    def is_strictly_positive(self):
        return bool(np.all(self.weights > 0))

    def embed(self, space, offset=0):
        """Re-express on a larger ``space`` whose points ``offset:`` start with ours."""
        w = np.zeros(space.n_points)
        w[offset:offset + self.n_points] = self.weights
        return DiscreteMeasure(space, w)


def union_space(a, b):
    """Coordinate space holding the points of ``a`` followed by those of ``b``."""
    if a.same_as(b):
        return a
    if not (a.has_coordinates and b.has_coordinates):
        raise ValueError("union of spaces needs coordinate mode on both sides")
    if a.points.shape[1] != b.points.shape[1]:
        raise ValueError("coordinate dimensions differ across spaces")
    return FiniteMetricSpace.from_points(np.vstack([a.points, b.points]))


def perturb(measure, mode, magnitude, seed, stream_name="perturb"):
    """Seeded perturbation of ``measure``.

    Parameters
    ----------
    mode : {'weight-jitter', 'empirical-subsample', 'point-jitter'}
        ``weight-jitter`` multiplies each weight by ``1 + u`` with
        ``u ~ U[-magnitude, magnitude]`` and renormalizes.
        ``empirical-subsample`` draws ``ceil(magnitude)`` i.i.d. atoms and
        returns their empirical measure on the same space.
        ``point-jitter`` adds ``U[-magnitude, magnitude]`` noise to every
        coordinate and returns a measure on a fresh space.
    magnitude : float
        Nonnegative; 0 returns ``measure`` itself.
    seed : int
        Root seed; draws come from the named stream ``stream_name``.
    """
    if mode not in PERTURB_MODES:
        raise ValueError(f"unknown perturbation mode {mode!r}; expected one of {PERTURB_MODES}")
    magnitude = float(magnitude)
    if not math.isfinite(magnitude) or magnitude < 0:
        raise ValueError(f"magnitude must be finite and >= 0, got {magnitude}")
    if mode == "point-jitter" and not measure.space.has_coordinates:
        raise ValueError("point-jitter needs a coordinate-mode space")
    if magnitude == 0:
        return measure
    rng = stream(seed, stream_name)
    if mode == "weight-jitter":
        factor = 1.0 + rng.uniform(-magnitude, magnitude, size=measure.n_points)
        if np.any(factor < 0):
            raise ValueError(f"weight-jitter magnitude {magnitude} drives weights negative")
        return DiscreteMeasure.from_masses(measure.space, measure.weights * factor)
    if mode == "empirical-subsample":
        m = math.ceil(magnitude)
        draws = rng.choice(measure.n_points, size=m, p=measure.weights)
        counts = np.bincount(draws, minlength=measure.n_points)
        return DiscreteMeasure(measure.space, counts / m)
    noise = rng.uniform(-magnitude, magnitude, size=measure.space.points.shape)
    space = FiniteMetricSpace.from_points(measure.space.points + noise)
    return DiscreteMeasure(space, measure.weights)
