"""Command-line surface.

Subcommands: run (single case), sweep, rates (refit from CSV), check
(coercivity + invariant suites), synthetic (plumbing self-test).
Exit codes: 0 success, 2 config error, 3 solver failure, 4 check failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import harness
from .diagnostics import EntropyParams, coercivity_suite
from .fields import SolverFailureError
from .geometry import CalibrationParams
from .harness import ConfigError, parse_config
from .reference import motion_law_residual
from .solver import PhaseBoundError, StepRejectedError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_CHECK = 4


def _load_config(path: str) -> harness.SweepConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def _cmd_run(args) -> int:
    cfg = _load_config(args.config)
    eps = args.epsilon if args.epsilon is not None else cfg.epsilon_list[0]
    outdir = os.path.join(harness.output_root(cfg), f"eps{eps:.6g}")
    case = harness.run_case(cfg, eps, outdir=outdir)
    print(f"eps={eps:g} m={case.m:.6g}: {len(case.rows)} snapshots -> {case.csv_path}")
    ag = harness.case_aggregates(case)
    for k, v in ag.items():
        print(f"  sup_t {k} = {v:.6e}")
    if case.energy_violations:
        print(f"  WARNING: {case.energy_violations} energy-inequality violations "
              f"(worst defect {case.worst_energy_defect:.3e})")
    if args.figures:
        from .plots import render_case_figures
        for p in render_case_figures(case, outdir):
            print(f"  figure: {p}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    result = harness.run_sweep(cfg, workers=args.workers)
    print(result.table())
    print(f"summary: {result.summary_path}")
    if args.figures:
        from .plots import render_case_figures, render_rate_figure
        outdir = harness.output_root(cfg)
        for case in result.cases:
            render_case_figures(case, os.path.join(outdir, f"eps{case.eps:.6g}"))
        print(f"figure: {render_rate_figure(result, outdir)}")
    return EXIT_OK


def _cmd_rates(args) -> int:
    fits = harness.rates_from_csv(args.csv)
    if not fits:
        print("no fittable columns found", file=sys.stderr)
        return EXIT_CHECK
    for col, fit in fits.items():
        print(f"{col}: exponent {fit.exponent:.4f} (residual {fit.residual:.3e})")
    return EXIT_OK


def _cmd_check(args) -> int:
    cfg = _load_config(args.config) if args.config else None
    rng = np.random.default_rng(args.seed)
    from .checks import random_admissible_state, reference_suite
    failures = []

    for name, res in reference_suite():
        status = "ok" if res < 1e-12 else "FAIL"
        if res >= 1e-12:
            failures.append(name)
        print(f"motion law {name}: residual {res:.3e} [{status}]")

    eps = 0.04
    delta = cfg.delta if cfg else 0.1
    for i in range(args.states):
        state, sol = random_admissible_state(rng, eps=eps, delta=delta)
        params = EntropyParams(epsilon=eps, calib=CalibrationParams(delta=delta, m=sol.m))
        checks = coercivity_suite(state, sol, params)
        bad = [k for k, v in checks.items() if not v["passed"]]
        if bad:
            failures.append(f"state {i}: {bad}")
            print(f"state {i}: FAILED {bad}")
    print(f"coercivity: {args.states} random states checked, "
          f"{len(failures)} failures")
    return EXIT_CHECK if failures else EXIT_OK


def _cmd_synthetic(args) -> int:
    cfg = _load_config(args.config)
    result = harness.synthetic_sweep(cfg)
    pred = harness.predicted_exponent(cfg.beta)
    ok = True
    for col, fit in result.fits.items():
        match = abs(fit.exponent - pred) < 1e-6
        ok &= match
        print(f"{col}: injected {pred:.6f}, refit {fit.exponent:.6f} "
              f"[{'ok' if match else 'FAIL'}]")
    return EXIT_OK if ok else EXIT_CHECK


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="nsacsim")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a single case")
    p.add_argument("config")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--figures", action="store_true")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="run the full epsilon sweep")
    p.add_argument("config")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--figures", action="store_true")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("rates", help="refit rates from an existing summary CSV")
    p.add_argument("csv")
    p.set_defaults(func=_cmd_rates)

    p = sub.add_parser("check", help="coercivity and exactness suites")
    p.add_argument("--config", default=None)
    p.add_argument("--states", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("synthetic", help="rate-fit plumbing self-test")
    p.add_argument("config")
    p.set_defaults(func=_cmd_synthetic)

    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverFailureError, PhaseBoundError, StepRejectedError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
