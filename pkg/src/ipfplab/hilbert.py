"""Hilbert projective metric on positive functions and Birkhoff contraction.

For positive f, g on a finite set, ``d_H(f, g)`` is the oscillation of
``log f - log g``. Everything here works on log-values; no ratio is formed.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._rng import stream
from ._validation import check_positive_values, check_vector, frozen
from .cost_kernel import seq_logsumexp

_BELOW_ONE = math.nextafter(1.0, 0.0)


@dataclass(frozen=True, eq=False)
class PositiveFunction:
    """Positive values ``exp(log_values + log_scale)``.

    The scale is kept apart so that positive rescaling leaves ``log_values``
    untouched and the projective metric sees it exactly.
    """

    log_values: np.ndarray
    log_scale: float = 0.0

    def __post_init__(self):
        lv = check_vector(self.log_values, "log_values")
        object.__setattr__(self, "log_values", frozen(lv))
        if not math.isfinite(self.log_scale):
            raise ValueError("log_scale must be finite")

    @classmethod
    def from_values(cls, values):
        return cls(np.log(check_positive_values(values, "values")))

    @property
    def values(self):
        return np.exp(self.log_values + self.log_scale)

    def scaled(self, factor):
        if not factor > 0:
            raise ValueError("scale factor must be positive")
        return PositiveFunction(self.log_values, self.log_scale + math.log(factor))


def _as_log(f):
    return f.log_values if isinstance(f, PositiveFunction) else np.asarray(f, dtype=np.float64)


def hilbert_metric_log(log_f, log_g):
    """``max(log f - log g) - min(log f - log g)`` for log-value arrays."""
    d = np.asarray(log_f, dtype=np.float64) - np.asarray(log_g, dtype=np.float64)
    return float(d.max() - d.min())


def hilbert_metric(f, g):
    """Hilbert projective distance between two :class:`PositiveFunction` objects."""
    lf, lg = _as_log(f), _as_log(g)
    if lf.shape != lg.shape:
        raise ValueError(f"index sets differ: {lf.shape} vs {lg.shape}")
    return hilbert_metric_log(lf, lg)


def hilbert_metric_product(f, f_hat, g, g_hat, method="grid"):
    """Distance between ``f(x) g(y)`` and ``f_hat(x) g_hat(y)`` on X x Y.

    ``method="grid"`` takes the oscillation over the full grid;
    ``method="sum"`` returns ``d_H(f, f_hat) + d_H(g, g_hat)``. The two agree
    because the oscillation of a separable sum splits.
    """
    if method == "sum":
        return hilbert_metric(f, f_hat) + hilbert_metric(g, g_hat)
    if method != "grid":
        raise ValueError(f"unknown method {method!r}")
    dx = _as_log(f) - _as_log(f_hat)
    dy = _as_log(g) - _as_log(g_hat)
    return hilbert_metric_log(dx[:, None] + dy[None, :], 0.0)


def contraction_bound(cost):
    """``tanh(sup |c|)``, clamped below 1 where tanh rounds up to 1.0."""
    s = cost if isinstance(cost, (int, float)) else cost.sup_norm
    return min(math.tanh(s), _BELOW_ONE)


def _apply_log(kernel, log_f, weights, axis):
    # log_f: (samples, k) over the integrated axis
    if axis == "x":
        terms = kernel.log_kernel[None, :, :] + log_f[:, :, None]
        return seq_logsumexp(terms, axis=1, b=weights[None, :, None])
    terms = kernel.log_kernel[None, :, :] + log_f[:, None, :]
    return seq_logsumexp(terms, axis=2, b=weights[None, None, :])


def _sample_log_functions(rng, samples, k):
    """Mix of smooth-ish and two-level random log-functions."""
    scale = rng.uniform(0.05, 5.0, size=(samples, 1))
    out = rng.uniform(-1.0, 1.0, size=(samples, k)) * scale
    two_level = rng.random(samples) < 0.5
    levels = np.where(rng.random((samples, k)) < 0.5, 1.0, -1.0) * scale
    return np.where(two_level[:, None], levels, out)


def empirical_contraction(kernel, pi, samples=1000, seed=0, axis="x"):
    """Largest observed ratio ``d_H(E f, E f') / d_H(f, f')`` over random pairs.

    ``axis="x"`` integrates over X against ``pi`` (the operator E^x),
    ``axis="y"`` over Y (E^y). The result is a lower bound on the Birkhoff
    contraction ratio of the operator.
    """
    if samples < 2:
        raise ValueError("samples must be >= 2")
    if axis not in ("x", "y"):
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    k = kernel.shape[0] if axis == "x" else kernel.shape[1]
    rng = stream(seed, f"empirical_contraction/{axis}")
    lf = _sample_log_functions(rng, samples, k)
    lg = _sample_log_functions(rng, samples, k)
    diff = lf - lg
    d_in = diff.max(axis=1) - diff.min(axis=1)
    out = _apply_log(kernel, lf, pi.weights, axis) - _apply_log(kernel, lg, pi.weights, axis)
    d_out = out.max(axis=1) - out.min(axis=1)
    keep = d_in > 0
    if not keep.any():
        return 0.0
    return float((d_out[keep] / d_in[keep]).max())
