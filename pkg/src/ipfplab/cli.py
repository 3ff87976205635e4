"""``ipfplab`` command line.

Exit codes: 0 success, 1 input error, 2 non-convergence, 3 bound violation.
Output files are written only after a command has fully succeeded (or, for
exit codes 2 and 3, after its report is complete), never partially.

Randomness: ``perturbation.seed`` (or ``--seed``) is the root seed. The
stability command perturbs pi0 on stream ``perturb/pi0`` and pi1 on stream
``perturb/pi1``; the perturb command uses stream ``perturb``.
"""

import argparse
import io
import json
import logging
import sys
from dataclasses import asdict, replace

from . import __version__
from .exact_w1 import wasserstein1
from .io import (ConfigError, cost_from_spec, dump_measure, json_ready, load_config,
                 load_measure)
from .ipfp_core import SchrodingerProblem, run_ipfp
from .metric_measure import PERTURB_MODES, perturb, union_space
from .stability import bridge_stability, run_stability_experiment

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_CONVERGED = 2
EXIT_VIOLATION = 3

SOLVE_MAX_ITERS = 1000
STABILITY_ITERS = 50
BRIDGE_MAX_ITERS = 100_000


def _emit(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _config(args):
    cfg = load_config(args.config)
    if args.max_iters is not None:
        cfg = replace(cfg, max_iters=args.max_iters)
    if args.tol is not None:
        cfg = replace(cfg, tol=args.tol)
    if args.out is not None:
        cfg = replace(cfg, output=args.out)
    return cfg


def _share_space(base, hat):
    """Put two measures on one space, taking the union of supports if needed."""
    if hat.space.same_as(base.space):
        return base, hat
    try:
        space = union_space(base.space, hat.space)
    except ValueError as exc:
        raise ConfigError(f"perturbed marginal lives on another space: {exc}") from exc
    return base.embed(space, 0), hat.embed(space, base.n_points)


def _perturbed(cfg, seed):
    pi0, pi1 = load_measure(cfg.pi0), load_measure(cfg.pi1)
    if cfg.has_explicit_hat == (cfg.perturbation is not None):
        raise ConfigError("stability needs exactly one of explicit pi0_hat/pi1_hat "
                          "or a perturbation spec")
    if cfg.perturbation is None:
        hat0 = load_measure(cfg.pi0_hat) if cfg.pi0_hat else pi0
        hat1 = load_measure(cfg.pi1_hat) if cfg.pi1_hat else pi1
    else:
        spec = cfg.perturbation
        seed = spec.seed if seed is None else seed
        try:
            hat0 = perturb(pi0, spec.mode, spec.magnitude, seed, "perturb/pi0") \
                if spec.target in ("pi0", "both") else pi0
            hat1 = perturb(pi1, spec.mode, spec.magnitude, seed, "perturb/pi1") \
                if spec.target in ("pi1", "both") else pi1
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    pi0, hat0 = _share_space(pi0, hat0)
    pi1, hat1 = _share_space(pi1, hat1)
    cost = cost_from_spec(cfg.cost, pi0.space, pi1.space, cfg.lip_override)
    return SchrodingerProblem(pi0, pi1, cost), SchrodingerProblem(hat0, hat1, cost)


def cmd_solve(args):
    cfg = _config(args)
    pi0, pi1 = load_measure(cfg.pi0), load_measure(cfg.pi1)
    cost = cost_from_spec(cfg.cost, pi0.space, pi1.space, cfg.lip_override)
    problem = SchrodingerProblem(pi0, pi1, cost)
    result = run_ipfp(problem, cfg.max_iters or SOLVE_MAX_ITERS, cfg.tol)
    buf = io.StringIO()
    result.write_csv(buf)
    _emit(buf.getvalue(), cfg.output)
    last = result.diagnostics[-1]
    status = "converged" if result.converged else "iteration cap reached"
    print(f"{status}: n_iter={result.n_iter} marginal_err={last.marginal_err!r}", file=sys.stderr)
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def cmd_stability(args):
    cfg = _config(args)
    problem, perturbed_problem = _perturbed(cfg, args.seed)
    iters = cfg.max_iters or STABILITY_ITERS
    report = run_stability_experiment(problem, perturbed_problem, iters)
    bridge = None
    try:
        bridge = bridge_stability(problem, perturbed_problem, cfg.tol or 1e-10, BRIDGE_MAX_ITERS)
    except RuntimeError as exc:
        print(f"bridge check skipped: {exc}", file=sys.stderr)

    buf = io.StringIO()
    report.write_csv(buf)
    meta = report.as_dict()
    meta["bridge"] = asdict(bridge) if bridge is not None else None
    _emit(buf.getvalue(), cfg.output)
    if cfg.output is not None:
        with open(cfg.output + ".meta.json", "w", encoding="utf-8") as fh:
            json.dump(json_ready(meta), fh, indent=2, sort_keys=True)
            fh.write("\n")

    h = report.header
    err = sys.stderr
    print(f"C={h['C']!r} w1_marginals_sum={h['w1_marginals_sum']!r} "
          f"lip_c={h['lip_c']!r} ({h['lip_provenance']})", file=err)
    if report.advisory:
        print("advisory: Lip(c) is a discrete estimate; Lipschitz-dependent checks "
              "do not affect the exit status", file=err)
    rows = {r.n: r for r in report.rows}
    for v in report.violations:
        tag = "advisory" if v.advisory else "VIOLATION"
        print(f"{tag}: {v.check} at n={v.n}: observed {v.observed!r} > bound {v.bound!r}",
              file=err)
        print("  row: " + ",".join(str(x) for x in rows[v.n].csv_values()), file=err)
    bridge_bad = bridge is not None and not bridge.holds and not report.advisory
    if bridge_bad:
        print(f"VIOLATION: bridge W1 {bridge.w1_bridges!r} > bound {bridge.bound!r}", file=err)
    return EXIT_OK if report.ok and not bridge_bad else EXIT_VIOLATION


def cmd_w1(args):
    mu, nu = load_measure(args.mu), load_measure(args.nu)
    try:
        value, _ = wasserstein1(mu, nu)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print(f"{value:.12f}")
    return EXIT_OK


def cmd_perturb(args):
    mu = load_measure(args.measure)
    seed = args.seed if args.seed is not None else 0
    try:
        out = perturb(mu, args.mode, args.magnitude, seed, "perturb")
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    buf = io.StringIO()
    dump_measure(out, buf)
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def _nonneg_int(s):
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected an integer >= 0, got {s}")
    return v


def _pos_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {s}")
    return v


def _nonneg_float(s):
    v = float(s)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"expected a real >= 0, got {s}")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="ipfplab", description="IPFP / Sinkhorn stability lab")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def run_flags(sp):
        sp.add_argument("--config", required=True, metavar="PATH", help="JSON experiment config")
        sp.add_argument("--out", metavar="PATH", help="CSV output (default: config 'output' or stdout)")
        sp.add_argument("--max-iters", type=_pos_int, metavar="N")
        sp.add_argument("--tol", type=_nonneg_float, metavar="X")

    sp = sub.add_parser("solve", help="run IPFP and write the trajectory CSV")
    run_flags(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("stability", help="paired runs with every bound checked")
    run_flags(sp)
    sp.add_argument("--seed", type=_nonneg_int, metavar="N", help="overrides perturbation.seed")
    sp.set_defaults(func=cmd_stability)

    sp = sub.add_parser("w1", help="exact Wasserstein-1 between two measure files")
    sp.add_argument("mu", metavar="MU")
    sp.add_argument("nu", metavar="NU")
    sp.set_defaults(func=cmd_w1)

    sp = sub.add_parser("perturb", help="write a seeded perturbation of a measure file")
    sp.add_argument("measure", metavar="MEASURE")
    sp.add_argument("--mode", required=True, choices=PERTURB_MODES)
    sp.add_argument("--magnitude", required=True, type=_nonneg_float, metavar="X")
    sp.add_argument("--seed", type=_nonneg_int, metavar="N", help="root seed (default 0)")
    sp.add_argument("--out", metavar="PATH")
    sp.set_defaults(func=cmd_perturb)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on bad usage; 2 is reserved for non-convergence here
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, OSError, ValueError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
