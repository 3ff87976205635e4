"""Input validation helpers shared by the public constructors."""

import numpy as np
from sklearn.utils import check_array


def frozen(a):
    """Return a read-only float64 copy of ``a``."""
    out = np.array(a, dtype=np.float64, copy=True)
    out.flags.writeable = False
    return out


def check_vector(v, name, n=None):
    v = check_array(np.asarray(v, dtype=np.float64).reshape(1, -1), ensure_all_finite=True,
                    input_name=name).ravel()
    if n is not None and v.shape[0] != n:
        raise ValueError(f"{name} has length {v.shape[0]}, expected {n}")
    return v


def check_table(t, name, shape=None):
    t = check_array(t, dtype=np.float64, ensure_all_finite=True, input_name=name)
    if shape is not None and t.shape != tuple(shape):
        raise ValueError(f"{name} has shape {t.shape}, expected {tuple(shape)}")
    return t


def check_weights(w, n=None, atol=1e-12, normalize=False):
    """Validate probability weights.

    With ``normalize=True`` any nonnegative vector with positive mass is
    rescaled; otherwise the sum must already be 1 within ``atol``.
    """
    w = check_vector(w, "weights", n)
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    total = w.sum()
    if normalize:
        if total <= 0:
            raise ValueError("weights must have positive total mass")
        w = w / total
    elif abs(total - 1.0) > atol:
        raise ValueError(f"weights sum to {total!r}, expected 1 within {atol}")
    return w


def check_positive_values(f, name="f", n=None):
    f = check_vector(f, name, n)
    if np.any(f <= 0):
        raise ValueError(f"{name} must be strictly positive")
    return f
