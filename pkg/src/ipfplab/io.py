"""JSON file formats: measures, cost specs and experiment configs.

Measure file::

    {"points": [[x, ...], ...] | "distances": [[...], ...], "weights": [...]}

``weights`` is optional (uniform) and is normalized on load. Cost spec::

    {"type": "quadratic" | "absolute" | "table", "epsilon": e, "table": [[...]]}

Unknown keys are rejected everywhere.
"""

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .cost_kernel import ANALYTIC, absolute_cost, quadratic_cost, table_cost
from .metric_measure import PERTURB_MODES, DiscreteMeasure, FiniteMetricSpace


class ConfigError(ValueError):
    """Malformed measure file, cost spec or experiment config."""


def _reject_unknown(d, allowed, what):
    if not isinstance(d, dict):
        raise ConfigError(f"{what} must be a JSON object")
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ConfigError(f"unknown field(s) in {what}: {', '.join(extra)}")


def _read_json(path, what):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {what} {path!r}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what} {path!r} is not valid JSON: {exc}") from exc


def measure_from_dict(d):
    _reject_unknown(d, ("points", "distances", "weights"), "measure file")
    if ("points" in d) == ("distances" in d):
        raise ConfigError("measure file needs exactly one of 'points' or 'distances'")
    try:
        if "points" in d:
            space = FiniteMetricSpace.from_points(d["points"])
        else:
            space = FiniteMetricSpace.from_distances(d["distances"])
        if d.get("weights") is None:
            return DiscreteMeasure.uniform(space)
        return DiscreteMeasure.from_masses(space, d["weights"])
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid measure: {exc}") from exc


def load_measure(path):
    return measure_from_dict(_read_json(path, "measure file"))


def measure_to_dict(measure):
    space = measure.space
    out = {"points": space.points.tolist()} if space.has_coordinates \
        else {"distances": space.distances.tolist()}
    out["weights"] = measure.weights.tolist()
    return out


def dump_measure(measure, fh):
    json.dump(measure_to_dict(measure), fh, indent=2)
    fh.write("\n")


def cost_from_spec(spec, space_x, space_y, lip_override=None):
    """Build a :class:`CostModel` from a cost spec dict."""
    _reject_unknown(spec, ("type", "epsilon", "table"), "cost spec")
    kind = spec.get("type")
    try:
        if kind == "quadratic":
            cost = quadratic_cost(space_x, space_y, spec.get("epsilon", 1.0))
        elif kind == "absolute":
            cost = absolute_cost(space_x, space_y, spec.get("epsilon", 1.0))
        elif kind == "table":
            if "table" not in spec:
                raise ConfigError("table cost needs a 'table' field")
            cost = table_cost(space_x, space_y, spec["table"])
        else:
            raise ConfigError(f"unknown cost type {kind!r}")
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid cost: {exc}") from exc
    if lip_override is not None:
        cost = cost.with_lipschitz(lip_override, ANALYTIC)
    return cost


_CONFIG_FIELDS = ("pi0", "pi1", "pi0_hat", "pi1_hat", "perturbation", "cost",
                  "max_iters", "tol", "output", "lip_override")
_PERTURB_FIELDS = ("mode", "magnitude", "seed", "target")


@dataclass(frozen=True)
class PerturbationSpec:
    mode: str
    magnitude: float
    seed: int
    target: str = "both"


@dataclass(frozen=True)
class ExperimentConfig:
    pi0: str
    pi1: str
    cost: dict
    pi0_hat: str = None
    pi1_hat: str = None
    perturbation: PerturbationSpec = None
    max_iters: int = None
    tol: float = 1e-10
    output: str = None
    lip_override: float = None

    @property
    def has_explicit_hat(self):
        return self.pi0_hat is not None or self.pi1_hat is not None


def _number(v, name, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{name} must be a number")
    if integer and not (isinstance(v, int) or float(v).is_integer()):
        raise ConfigError(f"{name} must be an integer")
    if not math.isfinite(v):
        raise ConfigError(f"{name} must be finite")
    return int(v) if integer else float(v)


def _perturbation(d):
    _reject_unknown(d, _PERTURB_FIELDS, "perturbation spec")
    for k in ("mode", "magnitude", "seed"):
        if k not in d:
            raise ConfigError(f"perturbation spec needs '{k}'")
    if d["mode"] not in PERTURB_MODES:
        raise ConfigError(f"unknown perturbation mode {d['mode']!r}")
    target = d.get("target", "both")
    if target not in ("pi0", "pi1", "both"):
        raise ConfigError(f"perturbation target must be pi0, pi1 or both, got {target!r}")
    mag = _number(d["magnitude"], "perturbation.magnitude")
    if mag < 0:
        raise ConfigError("perturbation.magnitude must be >= 0")
    seed = _number(d["seed"], "perturbation.seed", integer=True)
    if seed < 0:
        raise ConfigError("perturbation.seed must be >= 0")
    return PerturbationSpec(d["mode"], mag, seed, target)


def config_from_dict(d, base_dir="."):
    """Validate a config dict; relative paths resolve against ``base_dir``."""
    _reject_unknown(d, _CONFIG_FIELDS, "config")
    for k in ("pi0", "pi1", "cost"):
        if k not in d:
            raise ConfigError(f"config needs '{k}'")

    def path(key):
        v = d.get(key)
        if v is None:
            return None
        if not isinstance(v, str):
            raise ConfigError(f"{key} must be a path string")
        return v if os.path.isabs(v) else os.path.normpath(os.path.join(base_dir, v))

    kw = {k: path(k) for k in ("pi0", "pi1", "pi0_hat", "pi1_hat", "output")}
    if not isinstance(d["cost"], dict):
        raise ConfigError("cost must be a JSON object")
    _reject_unknown(d["cost"], ("type", "epsilon", "table"), "cost spec")
    kw["cost"] = d["cost"]
    if d.get("perturbation") is not None:
        kw["perturbation"] = _perturbation(d["perturbation"])
    if d.get("max_iters") is not None:
        kw["max_iters"] = _number(d["max_iters"], "max_iters", integer=True)
        if kw["max_iters"] < 1:
            raise ConfigError("max_iters must be >= 1")
    if d.get("tol") is not None:
        kw["tol"] = _number(d["tol"], "tol")
        if kw["tol"] < 0:
            raise ConfigError("tol must be >= 0")
    if d.get("lip_override") is not None:
        kw["lip_override"] = _number(d["lip_override"], "lip_override")
        if kw["lip_override"] < 0:
            raise ConfigError("lip_override must be >= 0")
    return ExperimentConfig(**kw)


def load_config(path):
    return config_from_dict(_read_json(path, "config"), os.path.dirname(os.path.abspath(path)))


def json_ready(obj):
    """Replace non-finite floats so the result is strict JSON."""
    if isinstance(obj, dict):
        return {k: json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_ready(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj
