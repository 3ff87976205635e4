"""Acceptance gate: the ten criteria at their stated tolerances.

Each test records a PASS/FAIL line (printed in the terminal summary) and then
asserts, so a failing criterion also fails the run.
"""

import io
import logging
import math
import shutil
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from acceptance_log import record
from instances import random_pair, random_problem, random_space, two_point_problem
from ipfplab import (DiscreteMeasure, SchrodingerProblem, coupling_even, coupling_odd,
                     marginal_error, run_ipfp, run_stability_experiment, solve_transport,
                     table_cost, theorem3_constant, wasserstein1)
from ipfplab.cli import main
from ipfplab.cost_kernel import log_kernel_apply_x, log_kernel_apply_y
from ipfplab.hilbert import contraction_bound, hilbert_metric_log
from ipfplab.metric_measure import lipschitz_on_space
from lp_oracle import transport_lp_bruteforce

pytestmark = pytest.mark.acceptance

ITERS = 50
CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture(scope="module", autouse=True)
def quiet():
    # empirical subsamples leave zero-weight atoms; the warning is expected here
    logging.disable(logging.WARNING)
    yield
    logging.disable(logging.NOTSET)


@pytest.fixture(scope="module")
def suite():
    """100 random instances, supports <= 20, sup |c| <= 2, 50 sweeps each."""
    rng = np.random.default_rng(20240101)
    runs = []
    for _ in range(100):
        p = random_problem(rng, max_atoms=20)
        assert p.cost.sup_norm <= 2.0 + 1e-12
        runs.append((p, run_ipfp(p, ITERS, tol=0.0)))
    return runs


@pytest.fixture(scope="module")
def paired():
    """50 paired instances, supports <= 12, 50 sweeps, every bound checked per sweep."""
    rng = np.random.default_rng(777)
    reports = []
    for k in range(50):
        p, q = random_pair(rng, max_atoms=12, seed=k)
        assert max(p.shape) <= 12 and p.cost.sup_norm <= 2.0 + 1e-12
        reports.append(run_stability_experiment(p, q, ITERS))
    return reports


def test_criterion_01_half_bridge_exactness(suite):
    worst = 0.0
    for p, res in suite:
        for n in range(1, len(res.pairs)):
            odd = coupling_odd(p, res.pairs[n], res.pairs[n - 1])
            even = coupling_even(p, res.pairs[n])
            worst = max(worst, marginal_error(odd, p.pi0, 0), marginal_error(even, p.pi1, 1))
    ok = worst <= 1e-10
    record(1, "half-bridge exactness", ok, f"max L1 marginal error {worst:.3e} <= 1e-10")
    assert ok


def test_criterion_02_potential_sup_bound(suite):
    worst = -math.inf
    for p, res in suite:
        s = p.cost.sup_norm
        for pair in res.pairs:
            worst = max(worst, max(np.abs(pair.phi).max(), np.abs(pair.psi).max()) - 3 * s)
    ok = worst <= 1e-9
    record(2, "potentials within 3 sup|c|", ok, f"max(|phi|, |psi|) - 3 sup|c| = {worst:.3e} <= 1e-9")
    assert ok


def test_criterion_03_lipschitz_and_sup_of_f(suite):
    lip_gap, f_ratio, flip_ratio = -math.inf, 0.0, 0.0
    for p, res in suite:
        assert p.cost.lip_provenance == "analytic"
        lip, s = p.cost.lip_const, p.cost.sup_norm
        sx, sy = p.cost.space_x, p.cost.space_y
        for pair in res.pairs[1:]:
            lip_gap = max(lip_gap, lipschitz_on_space(pair.phi, sx) - lip,
                          lipschitz_on_space(pair.psi, sy) - lip)
            f_ratio = max(f_ratio, math.exp(max(np.abs(pair.phi).max(), np.abs(pair.psi).max()) - 3 * s))
            if lip > 0:
                flip_ratio = max(flip_ratio, lipschitz_on_space(pair.f, sx) / (lip * math.exp(3 * s)))
    ok = lip_gap <= 1e-9 and f_ratio <= 1 + 1e-9 and flip_ratio <= 1 + 1e-9
    record(3, "Lipschitz of potentials and sup of f", ok,
           f"Lip gap {lip_gap:.3e}, |f|/e^(3|c|) {f_ratio:.6f}, Lip(f)/(Lip(c) e^(3|c|)) {flip_ratio:.6f}")
    assert ok


def test_criterion_04_birkhoff_contraction(suite):
    rng = np.random.default_rng(4)
    worst_pair = -math.inf
    for p, res in suite[:20]:
        k = p.kernel
        kappa = contraction_bound(p.cost)
        for apply, pi, size in ((log_kernel_apply_x, p.pi0, p.shape[0]),
                                (log_kernel_apply_y, p.pi1, p.shape[1])):
            for _ in range(1000 // 50):
                scale = rng.uniform(0.05, 5.0)
                f = rng.uniform(-1, 1, size=(50, size)) * scale
                g = rng.uniform(-1, 1, size=(50, size)) * scale
                for a, b in zip(f, g):
                    out = hilbert_metric_log(apply(k, a, pi), apply(k, b, pi))
                    worst_pair = max(worst_pair, out - kappa * hilbert_metric_log(a, b))
    first_step, floor_rows, other_rows = set(), 0, 0
    for i, (p, res) in enumerate(suite):
        kappa = contraction_bound(p.cost)
        d1 = res.diagnostics[0].dH_f_step
        # row n holds d_H(f_n, f_{n-1}); the bound is kappa^(n-1) d_H(f_1, f_0)
        bad = [row for row in res.diagnostics[1:]
               if row.dH_f_step > kappa ** (row.n - 1) * d1 * (1 + 1e-9)]
        if any(row.n == 2 for row in bad):
            # an excess at n = 2 carries into every later bound of the instance
            first_step.add(i)
            continue
        floor_rows += sum(row.dH_f_step < 1e-14 for row in bad)
        other_rows += sum(row.dH_f_step >= 1e-14 for row in bad)
    decay_ok = not first_step and not floor_rows and not other_rows
    ok = worst_pair <= 1e-9 and decay_ok
    record(4, "Birkhoff contraction", ok,
           f"operator pairs: max d_H(Ef, Ef') - kappa d_H(f, f') = {worst_pair:.3e}; "
           f"step decay: {len(first_step)} instances fail from the first step, "
           f"{floor_rows} rows elsewhere fail below 1e-14 (rounding floor), {other_rows} other rows")
    assert worst_pair <= 1e-9
    assert decay_ok, "step decay from d_H(f_1, f_0) fails; see the ledger"


def _violations(reports, checks):
    return [(i, v) for i, r in enumerate(reports) for v in r.violations if v.check in checks]


def test_criterion_05_uniform_stability(paired):
    bad = _violations(paired, {"theorem3", "remark5_odd", "remark5_even"})
    rows = [row for r in paired for row in r.rows]
    assert len(rows) == 50 * ITERS
    min_slack = min(row.slack3 for row in rows)
    lower = min(min(row.w1_odd - r.header["w1_pi0"], row.w1_even - r.header["w1_pi1"])
                for r in paired for row in r.rows)
    ok = not bad
    record(5, "uniform W1 stability and marginal lower bound", ok,
           f"{len(bad)} violations over {len(rows)} sweeps; min slack {min_slack:.3e}; "
           f"min lower-bound margin {lower:.3e}")
    assert ok, bad[:5]


def test_criterion_06_potential_gaps(paired):
    bad = _violations(paired, {"theorem15", "lemma16", "theorem17"})
    rows = [row for r in paired for row in r.rows]
    s15 = min(row.slack15 for row in rows)
    s17 = min(row.slack17 for row in rows)
    s16 = min(row.lem16_bound / row.lem16_gap for row in rows if row.lem16_gap > 0)
    ok = not bad
    record(6, "Hilbert, witness and sup gaps of f g", ok,
           f"{len(bad)} violations; min slack 15/16/17 = {s15:.3e}/{s16:.3e}/{s17:.3e}")
    assert ok, bad[:5]


def test_criterion_07_w1_oracle():
    rng = np.random.default_rng(7007)
    mismatches = 0
    for _ in range(200):
        m, n = (int(v) for v in rng.integers(1, 5, size=2))
        xs, ys = rng.integers(0, 8, size=m), rng.integers(0, 8, size=n)
        ca, cb = rng.integers(1, 7, size=m), rng.integers(1, 7, size=n)
        a = [Fraction(int(c), int(ca.sum())) for c in ca]
        b = [Fraction(int(c), int(cb.sum())) for c in cb]
        cost = np.abs(xs[:, None] - ys[None, :]).astype(float)
        oracle = transport_lp_bruteforce(a, b, cost.tolist())
        plan = solve_transport([float(v) for v in a], [float(v) for v in b], cost)
        if not (plan.exact and plan.total_cost == float(oracle)):
            mismatches += 1
    axiom_err = 0.0
    for _ in range(50):
        sp = random_space(rng, int(rng.integers(2, 9)), 2)
        mu, nu, rho = (DiscreteMeasure(sp, rng.dirichlet(np.ones(sp.n_points))) for _ in range(3))
        d = wasserstein1(mu, nu)[0]
        axiom_err = max(axiom_err, abs(d - wasserstein1(nu, mu)[0]) / 1e-10,
                        (d - wasserstein1(mu, rho)[0] - wasserstein1(rho, nu)[0]) / 1e-9,
                        wasserstein1(mu, mu)[0])
    ok = mismatches == 0 and axiom_err <= 1.0
    record(7, "W1 oracle", ok, f"{mismatches}/200 mismatches against LP enumeration; "
           f"axiom error ratio {axiom_err:.3f} <= 1")
    assert ok


def test_criterion_08_worked_instance():
    p = two_point_problem()
    res = run_ipfp(p, 100)
    psi1 = res.pairs[1].psi
    diag = np.diag(res.coupling.table)
    e_psi = np.abs(psi1 - (math.log(2) - math.log(1 + math.exp(-1)))).max()
    e_diag = np.abs(diag - 1 / (2 * (1 + math.exp(-1)))).max()
    ok = res.converged and e_psi <= 1e-12 and e_diag <= 1e-12
    record(8, "worked two-point instance", ok, f"psi_1 error {e_psi:.1e}, diagonal error {e_diag:.1e}")
    assert ok


def test_criterion_09_zero_cost():
    rng = np.random.default_rng(9)
    sx, sy = random_space(rng, 5, 2), random_space(rng, 4, 2)
    cost = table_cost(sx, sy, np.zeros((5, 4)))
    p = SchrodingerProblem(DiscreteMeasure(sx, rng.dirichlet(np.ones(5))),
                           DiscreteMeasure(sy, rng.dirichlet(np.ones(4))), cost)
    q = p.with_marginals(DiscreteMeasure(sx, rng.dirichlet(np.ones(5))),
                         DiscreteMeasure(sy, rng.dirichlet(np.ones(4))))
    res = run_ipfp(p, 10, tol=0.0)
    zeros = all(np.all(pr.phi == 0) and np.all(pr.psi == 0) for pr in res.pairs)
    product = np.array_equal(coupling_even(p, res.pairs[1]).table,
                             np.outer(p.pi0.weights, p.pi1.weights))
    big_c = theorem3_constant(cost, 1.0, 1.0)[0]
    rep = run_stability_experiment(p, q, 10)
    ok = zeros and product and big_c == 1.0 and rep.header["C"] == 1.0 and not rep.violations
    record(9, "zero cost", ok, f"potentials zero {zeros}, P^2 = product {product}, C = {big_c}, "
           f"{len(rep.violations)} violations")
    assert ok


def test_criterion_10_determinism(tmp_path):
    for f in CONFIGS.glob("*.json"):
        shutil.copy(f, tmp_path)
    runs = [("solve", "two_point_solve"), ("solve", "grid_subsample"),
            ("stability", "two_point_stability"), ("stability", "zero_cost"),
            ("stability", "grid_subsample")]
    same = 0
    for cmd, name in runs:
        outs = []
        for k in range(2):
            out = tmp_path / f"{cmd}_{name}_{k}.csv"
            main([cmd, "--config", str(tmp_path / f"{name}.json"), "--out", str(out)])
            outs.append(out.read_bytes())
        same += outs[0] == outs[1] and len(outs[0]) > 0
    ok = same == len(runs)
    record(10, "determinism", ok, f"{same}/{len(runs)} shipped runs byte-identical")
    assert ok
