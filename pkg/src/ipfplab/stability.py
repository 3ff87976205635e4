"""Paired IPFP runs and the quantitative stability bounds.

Two problems share spaces and cost but differ in their marginals. Both are
run for the same number of sweeps and, at every sweep n, the observed gaps
between the iterates are compared with their bounds:

* W1 between same-parity couplings vs ``C * (W1(pi0, pi0') + W1(pi1, pi1'))``
  with ``C = exp(17 |c|) (1 + 15 Lip(c) (diam X + diam Y))``;
* ``d_H(f_n g_n, f'_n g'_n)`` vs ``8 Lip(c) exp(10 |c|) * w1_sum``;
* grid minimum of ``|f_n g_n / (f'_n g'_n) - 1|`` vs ``4 Lip(c) exp(10 |c|) * w1_sum``;
* ``sup |f_n g_n - f'_n g'_n|`` vs ``12 Lip(c) exp(16 |c|) * w1_sum``;
* the lower bound: W1 between the couplings is at least W1 between the
  marginals each of them fixes.

Bounds are carried in log form; comparisons switch to log space once a
bound's log exceeds 700.
"""

import csv
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .cost_kernel import DISCRETE
from .exact_w1 import wasserstein1, wasserstein1_grid
from .hilbert import hilbert_metric_log
from .ipfp_core import coupling_even, coupling_odd, run_ipfp
from .metric_measure import diameter

#: absolute slack on every inequality, for floating-point rounding
CHECK_ATOL = 1e-9
LOG_COMPARE_THRESHOLD = 700.0

REPORT_COLUMNS = ("n", "w1_couplings", "thm3_bound", "dh_fg", "thm15_bound", "sup_fg",
                  "thm17_bound", "lem16_gap", "lem16_bound", "w1_marginals_sum",
                  "slack3", "slack15", "slack17")


def _log_or_neg_inf(x):
    return math.log(x) if x > 0 else -math.inf


def _exp_or_inf(log_x):
    if log_x == -math.inf:
        return 0.0
    return math.exp(log_x) if log_x < 709.0 else math.inf


def _norms(cost):
    """``(sup |c|, Lip(c))`` from a CostModel or a plain pair."""
    if hasattr(cost, "sup_norm"):
        return cost.sup_norm, cost.lip_const
    s, lip = cost
    return float(s), float(lip)


def theorem3_constant(cost, diam_x, diam_y):
    """``C = exp(17 |c|) (1 + 15 Lip(c) (diam_x + diam_y))`` as ``(C, log C)``.

    ``cost`` is a CostModel or a ``(sup |c|, Lip(c))`` pair. ``C`` is
    ``inf`` when it overflows; ``log C`` is always finite.
    """
    if diam_x < 0 or diam_y < 0:
        raise ValueError("diameters must be nonnegative")
    s, lip = _norms(cost)
    log_c = 17.0 * s + math.log1p(15.0 * lip * (diam_x + diam_y))
    return _exp_or_inf(log_c), log_c


def _log_potential_bound(coef, exponent, cost, w1_sum):
    s, lip = _norms(cost)
    if lip == 0 or w1_sum == 0:
        return -math.inf
    return math.log(coef) + math.log(lip) + exponent * s + math.log(w1_sum)


def theorem15_bound(cost, w1_sum, log=False):
    """``8 Lip(c) exp(10 |c|) w1_sum`` (Hilbert gap of the potentials)."""
    lb = _log_potential_bound(8.0, 10.0, cost, w1_sum)
    return lb if log else _exp_or_inf(lb)


def theorem17_bound(cost, w1_sum, log=False):
    """``12 Lip(c) exp(16 |c|) w1_sum`` (sup-norm gap of the potentials)."""
    lb = _log_potential_bound(12.0, 16.0, cost, w1_sum)
    return lb if log else _exp_or_inf(lb)


def lemma16_bound(cost, w1_sum, log=False):
    """``4 Lip(c) exp(10 |c|) w1_sum`` (best grid point ratio gap)."""
    lb = _log_potential_bound(4.0, 10.0, cost, w1_sum)
    return lb if log else _exp_or_inf(lb)


def _holds(observed, log_bound, atol=CHECK_ATOL):
    if observed <= atol:
        return True
    if log_bound > LOG_COMPARE_THRESHOLD:
        return math.log(observed) <= log_bound
    return observed <= _exp_or_inf(log_bound) + atol


def _slack(bound, observed):
    if observed == 0:
        return math.inf
    return bound / observed


@dataclass(frozen=True)
class StabilityRow:
    """Observed gaps and bounds at sweep ``n`` (couplings P^{2n-1} and P^{2n}).

    ``w1_couplings`` is the larger of ``w1_odd`` and ``w1_even``.
    """

    n: int
    w1_couplings: float
    thm3_bound: float
    dh_fg: float
    thm15_bound: float
    sup_fg: float
    thm17_bound: float
    lem16_gap: float
    lem16_bound: float
    w1_marginals_sum: float
    slack3: float
    slack15: float
    slack17: float
    w1_odd: float = 0.0
    w1_even: float = 0.0

    def csv_values(self):
        return [self.n] + [repr(float(getattr(self, c))) for c in REPORT_COLUMNS[1:]]


@dataclass(frozen=True)
class Violation:
    n: int
    check: str
    observed: float
    bound: float
    advisory: bool


@dataclass(frozen=True, eq=False)
class StabilityReport:
    header: dict
    rows: tuple = field(repr=False)
    violations: tuple = ()

    @property
    def advisory(self):
        return self.header["lip_provenance"] == DISCRETE

    @property
    def hard_violations(self):
        return tuple(v for v in self.violations if not v.advisory)

    @property
    def ok(self):
        return not self.hard_violations

    def write_csv(self, fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for row in self.rows:
            w.writerow(row.csv_values())

    def as_dict(self):
        return {"header": dict(self.header),
                "violations": [asdict(v) for v in self.violations]}


def _check_paired(problem, perturbed):
    c, ch = problem.cost, perturbed.cost
    if not (c.space_x.same_as(ch.space_x) and c.space_y.same_as(ch.space_y)):
        raise ValueError("paired problems must share their spaces")
    if not np.array_equal(c.table, ch.table):
        raise ValueError("paired problems must share their cost table")


def stability_header(problem, perturbed, **extra):
    cost = problem.cost
    dx, dy = diameter(cost.space_x), diameter(cost.space_y)
    w1_0 = wasserstein1(problem.pi0, perturbed.pi0)[0]
    w1_1 = wasserstein1(problem.pi1, perturbed.pi1)[0]
    big_c, log_c = theorem3_constant(cost, dx, dy)
    header = {
        "C": big_c, "log_C": log_c,
        "lip_c": cost.lip_const, "lip_provenance": cost.lip_provenance,
        "advisory": cost.lip_provenance == DISCRETE,
        "sup_c": cost.sup_norm, "diam_x": dx, "diam_y": dy,
        "w1_pi0": w1_0, "w1_pi1": w1_1, "w1_marginals_sum": w1_0 + w1_1,
    }
    header.update(extra)
    return header


def run_stability_experiment(problem, perturbed_problem, iters, **header_extra):
    """Run both problems for ``iters`` sweeps and check every bound at each sweep.

    Returns
    -------
    StabilityReport
        One row per sweep n in [1, iters]. Violations of Lipschitz-dependent
        bounds are marked advisory when Lip(c) is only a grid estimate.
    """
    _check_paired(problem, perturbed_problem)
    iters = int(iters)
    if iters < 1:
        raise ValueError(f"iters must be >= 1, got {iters}")
    header = stability_header(problem, perturbed_problem, iters=iters, **header_extra)
    cost = problem.cost
    w1_sum = header["w1_marginals_sum"]
    log_thm3 = header["log_C"] + _log_or_neg_inf(w1_sum)
    log15 = theorem15_bound(cost, w1_sum, log=True)
    log16 = lemma16_bound(cost, w1_sum, log=True)
    log17 = theorem17_bound(cost, w1_sum, log=True)
    advisory = header["advisory"]
    dist_x, dist_y = cost.space_x.distances, cost.space_y.distances

    run = run_ipfp(problem, iters, tol=0.0)
    run_hat = run_ipfp(perturbed_problem, iters, tol=0.0)
    pairs, pairs_hat = run.pairs, run_hat.pairs

    memo = {}

    def w1(p, q):
        key = (p.table.tobytes(), q.table.tobytes())
        if key not in memo:
            memo[key] = wasserstein1_grid(p.table, q.table, dist_x, dist_y)
        return memo[key]

    rows, violations = [], []
    for n in range(1, iters + 1):
        odd = w1(coupling_odd(problem, pairs[n], pairs[n - 1]),
                 coupling_odd(perturbed_problem, pairs_hat[n], pairs_hat[n - 1]))
        even = w1(coupling_even(problem, pairs[n]), coupling_even(perturbed_problem, pairs_hat[n]))
        w1_pp = max(odd, even)

        log_h = pairs[n].phi[:, None] + pairs[n].psi[None, :]
        log_h_hat = pairs_hat[n].phi[:, None] + pairs_hat[n].psi[None, :]
        diff = log_h - log_h_hat
        dh = hilbert_metric_log(diff, 0.0)
        sup_fg = float(np.abs(np.exp(log_h) - np.exp(log_h_hat)).max())
        gap16 = float(np.abs(np.expm1(diff)).min())

        checks = (
            ("theorem3", w1_pp, log_thm3, advisory),
            ("theorem15", dh, log15, advisory),
            ("lemma16", gap16, log16, advisory),
            ("theorem17", sup_fg, log17, advisory),
        )
        for name, obs, lb, adv in checks:
            if not _holds(obs, lb):
                violations.append(Violation(n, name, obs, _exp_or_inf(lb), adv))
        # each coupling fixes one marginal: odd ones pi0, even ones pi1
        for name, obs, low in (("remark5_odd", odd, header["w1_pi0"]),
                               ("remark5_even", even, header["w1_pi1"])):
            if obs < low - CHECK_ATOL:
                violations.append(Violation(n, name, obs, low, False))

        b3, b15, b17 = _exp_or_inf(log_thm3), _exp_or_inf(log15), _exp_or_inf(log17)
        rows.append(StabilityRow(
            n=n, w1_couplings=w1_pp, thm3_bound=b3, dh_fg=dh, thm15_bound=b15,
            sup_fg=sup_fg, thm17_bound=b17, lem16_gap=gap16, lem16_bound=_exp_or_inf(log16),
            w1_marginals_sum=w1_sum, slack3=_slack(b3, w1_pp), slack15=_slack(b15, dh),
            slack17=_slack(b17, sup_fg), w1_odd=odd, w1_even=even,
        ))
    return StabilityReport(header, tuple(rows), tuple(violations))


@dataclass(frozen=True)
class BridgeRow:
    w1_bridges: float
    bound: float
    budget: float
    marginal_err: float
    marginal_err_hat: float
    n_iter: int
    n_iter_hat: int
    holds: bool
    slack: float


def bridge_stability(problem, perturbed_problem, tol=1e-10, max_iters=100_000):
    """Compare the converged bridges of the two problems.

    The limit is the last even iterate with X-marginal error below ``tol``.
    Because that iterate is not the exact bridge, ``(diam X + diam Y)`` times
    the two marginal errors is added to the allowed gap.
    """
    _check_paired(problem, perturbed_problem)
    run = run_ipfp(problem, max_iters, tol)
    run_hat = run_ipfp(perturbed_problem, max_iters, tol)
    if not (run.converged and run_hat.converged):
        raise RuntimeError(f"IPFP did not reach tol={tol} within {max_iters} sweeps")
    header = stability_header(problem, perturbed_problem)
    cost = problem.cost
    err, err_hat = run.diagnostics[-1].marginal_err, run_hat.diagnostics[-1].marginal_err
    budget = (header["diam_x"] + header["diam_y"]) * (err + err_hat)
    w1_b = wasserstein1_grid(run.coupling.table, run_hat.coupling.table,
                             cost.space_x.distances, cost.space_y.distances)
    log_bound = header["log_C"] + _log_or_neg_inf(header["w1_marginals_sum"])
    bound = _exp_or_inf(log_bound)
    holds = _holds(max(w1_b - budget, 0.0), log_bound)
    return BridgeRow(w1_b, bound, budget, err, err_hat, run.n_iter, run_hat.n_iter,
                     holds, _slack(bound, w1_b))
