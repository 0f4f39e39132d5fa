"""Command-line interface.

Subcommands: solve, verify, ym, oracle, report.  Exit codes: 0 ok,
2 configuration error, 3 solver failure, 4 verification residual
exceeded.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import config as configmod, descent, limits as limitsmod, \
    mesh as meshmod, oracles, pipeline, youngmeasure
from .errors import (ConfigurationError, ContractViolation, SolverError,
                     VerificationError)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_VERIFY = 4


def _cmd_solve(args):
    cfg = configmod.parse_config(args.config)
    if args.outdir:
        cfg.outdir = args.outdir
    result = pipeline.run_and_emit(cfg)
    rep = result.report
    print(f"alpha_scheme = {rep['final']['alpha_scheme']!r}")
    print(f"theta_coeff1 = {rep['relaxation']['theta_coeff1']!r}")
    print(f"convention   = {rep['relaxation']['convention_verdict']}")
    print(f"outputs in   {cfg.outdir}")
    return EXIT_OK


def _cmd_verify(args):
    checks = pipeline.verify_run(args.run_dir, tol=args.tol)
    for key, val in checks.items():
        print(f"{key} = {val!r}")
    return EXIT_OK


def _cmd_ym(args):
    cfg, mesh, coeffs, u, chi, p = pipeline.load_run(args.run_dir)
    eps = mesh.symmetrized_gradient(u)
    windows = meshmod.build_windows(mesh, cfg.window)
    bundle = limitsmod.estimate_limits(mesh, windows, u, eps, p, chi)
    masks = limitsmod.partition_masks(mesh, coeffs, bundle, eta=cfg.eta)
    measures = youngmeasure.estimate_ym(mesh, windows, eps, chi, coeffs)
    report = pipeline.load_report(args.run_dir)
    block = {
        "energy": youngmeasure.ym_energy_check(
            measures, windows, report["final"]["alpha_scheme"]),
        "second_moment": youngmeasure.second_moment_check(
            mesh, coeffs, bundle, masks),
        "dirac": pipeline._dirac_block(
            youngmeasure.dirac_check(measures, masks,
                                     dirac_tol=cfg.dirac_tol)),
        "two_point_variance": youngmeasure.two_point_variance_check(
            mesh, coeffs, measures, windows, dist_tol=cfg.dist_tol),
    }
    print(pipeline.to_json(block))
    return EXIT_OK


def _parse_oracle_params(tokens):
    vals = {"a": 1.0, "b": 1.0, "c": 0.0, "d": 0.0, "volume": 1.0}
    for tok in tokens:
        key, sep, val = tok.partition("=")
        if not sep or key not in vals:
            raise ConfigurationError(
                f"oracle parameters are key=value with keys {sorted(vals)};"
                f" got {tok!r}")
        try:
            vals[key] = float(val)
        except ValueError:
            raise ConfigurationError(f"bad numeric value in {tok!r}")
    return vals


def _cmd_oracle(args):
    vals = _parse_oracle_params(args.params)
    env = oracles.envelope_1d(vals["a"], vals["c"], vals["b"], vals["d"])
    out = {
        "parabolas": {"a": env.a, "c": env.c, "b": env.b, "d": env.d},
        "pieces": [
            {k: (None if isinstance(v, float) and not np.isfinite(v)
                 else v) for k, v in piece.items()}
            for piece in env.pieces
        ],
        "f_star_star_at_0": env(0.0),
        "exact_alpha": vals["volume"] * env(0.0),
    }
    print(pipeline.to_json(out))
    return EXIT_OK


def _cmd_report(args):
    path = os.path.join(args.run_dir, "report.json")
    with open(path) as fh:
        report = json.load(fh)
    if args.full:
        print(pipeline.to_json(report))
        return EXIT_OK
    relax = report["relaxation"]
    ym = report["young_measure"]
    lines = [
        ("alpha_scheme", report["final"]["alpha_scheme"]),
        ("duality_gap", report["final"]["duality"]["gap"]),
        ("ker_residual", report["final"]["duality"]["ker_residual"]),
        ("d", relax["d"]),
        ("denominator", relax["denominator"]),
        ("theta_coeff1", relax["theta_coeff1"]),
        ("theta_half", relax["theta_half"]),
        ("convention", relax["convention_verdict"]),
        ("alpha_formula_coeff1", relax["alpha_formula_coefficient_1"]),
        ("lower_bound", relax["lower_bound"]["bound"]),
        ("stuck_suspected", relax["stuck_suspected"]),
        ("ym_energy_residual", ym["energy"]["residual"]),
        ("dirac_all_passed", ym["dirac"]["all_passed"]),
    ]
    for key, val in lines:
        print(f"{key} = {val!r}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="doublewell",
        description="Numerical laboratory for a nonconvex double-well "
                    "variational problem: alternating convex descent, "
                    "duality checks, relaxation formulas, Young measures.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run an experiment from a config file")
    p.add_argument("config")
    p.add_argument("--outdir", default=None,
                   help="override the configured output directory")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("verify",
                       help="re-evaluate reported numbers from the dumps")
    p.add_argument("run_dir")
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("ym", help="recompute the Young-measure checks")
    p.add_argument("run_dir")
    p.set_defaults(func=_cmd_ym)

    p = sub.add_parser("oracle",
                       help="1D envelope oracle; params like a=1 c=1 b=1 "
                            "d=-1 volume=1")
    p.add_argument("params", nargs="*")
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("report", help="print a run summary")
    p.add_argument("run_dir")
    p.add_argument("--full", action="store_true")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, ContractViolation) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
