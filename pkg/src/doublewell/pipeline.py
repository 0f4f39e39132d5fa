"""Experiment orchestration, report assembly, persistence, verification.

A run executes the descent engine level by level (multistart at the
coarsest level, phase prolongation plus fresh seeds afterwards), then
estimates weak limits, relaxation formulas and Young measures at the
finest level and assembles a deterministic JSON report.  Wall-clock
timings are kept out of report.json so that a fixed config and seed
reproduce it byte for byte; they go to a separate timing file.
"""

from __future__ import annotations

import csv
import os
import re
import time
from dataclasses import dataclass

import numpy as np

from . import (config as configmod, descent, limits as limitsmod,
               mesh as meshmod, relaxation, subproblem, youngmeasure)
from .errors import ConfigurationError, VerificationError

VERSION = "0.1.0"


@dataclass
class RunResult:
    cfg: configmod.RunConfig
    report: dict
    meshes: list
    coeffs_by_level: list
    traces_by_level: list      # list of lists, all multistart traces
    best_by_level: list        # best trace per level
    windows: object
    bundle: object
    masks: object
    measures: list             # WindowMeasure list
    timings: dict


def _trace_record(trace):
    return {
        "seed": trace.seed_label,
        "level": trace.level,
        "fixed_point": bool(trace.fixed_point),
        "budget_exhausted": bool(trace.budget_exhausted),
        "final_alpha": float(trace.alpha),
        "steps": [
            {k: (float(v) if isinstance(v, (float, np.floating)) else int(v))
             for k, v in step.items()}
            for step in trace.steps
        ],
    }


def _theta_for_level(cfg, mesh, coeffs, trace):
    """Per-level theta estimate for the refinement plot."""
    if np.any(mesh.shape % cfg.window != 0):
        return None
    windows = meshmod.build_windows(mesh, cfg.window)
    eps = mesh.symmetrized_gradient(trace.u)
    bundle = limitsmod.estimate_limits(mesh, windows, trace.u, eps,
                                       trace.p, trace.chi)
    masks = limitsmod.partition_masks(mesh, coeffs, bundle, eta=cfg.eta)
    d = limitsmod.gap_d(mesh, coeffs, bundle, masks)
    den = relaxation.gap_denominator(mesh, coeffs, bundle, masks)
    tol_den = cfg.tol_den
    if tol_den is None:
        cd2 = mesh.frob_norm2(coeffs.C - coeffs.D)
        tol_den = 1e-12 * float((mesh.measures * coeffs.a * cd2).sum())
    return relaxation.theta_estimate(d, den, tol_den).theta_coeff1


def run_experiment(cfg):
    """Full pipeline for one configuration; returns a RunResult."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    meshes = cfg.build_meshes()
    coeffs_by_level = [cfg.build_coeffs(m) for m in meshes]

    traces_by_level, best_by_level, level_blocks = [], [], []
    theta_by_level = []
    for lvl, (mesh, coeffs) in enumerate(zip(meshes, coeffs_by_level)):
        traces = descent.multistart(mesh, coeffs, cfg.seeds, rng,
                                    budget=cfg.budget, tol=cfg.solver_tol,
                                    level=lvl)
        if lvl > 0:
            init = descent.refine_continue(meshes[lvl - 1], mesh,
                                           best_by_level[-1])
            cont = descent.alternate(mesh, coeffs, init,
                                     budget=cfg.budget,
                                     tol=cfg.solver_tol, level=lvl,
                                     seed_label="continued")
            traces = sorted(traces + [cont], key=lambda t: t.alpha)
        best = traces[0]
        traces_by_level.append(traces)
        best_by_level.append(best)
        theta_by_level.append(_theta_for_level(cfg, mesh, coeffs, best))
        level_blocks.append({
            "level": lvl,
            "n_elem": int(mesh.n_elem),
            "best_seed": best.seed_label,
            "best_alpha": float(best.alpha),
            "traces": [_trace_record(t) for t in traces],
        })
    t_descent = time.perf_counter()

    mesh = meshes[-1]
    coeffs = coeffs_by_level[-1]
    best = best_by_level[-1]
    eps = mesh.symmetrized_gradient(best.u)
    windows = meshmod.build_windows(mesh, cfg.window)
    bundle = limitsmod.estimate_limits(mesh, windows, best.u, eps,
                                       best.p, best.chi)
    masks = limitsmod.partition_masks(mesh, coeffs, bundle, eta=cfg.eta)
    d = limitsmod.gap_d(mesh, coeffs, bundle, masks)
    alpha_scheme = float(best.alpha)

    omega0 = masks.omega0_elem
    alg = subproblem.alpha_representations(mesh, coeffs, best.chi, best.u,
                                           best.p, omega0,
                                           guard_scale=cfg.guard_scale)
    dual = subproblem.duality_report(mesh, coeffs, best.chi, best.u,
                                     best.p, alpha=alpha_scheme)
    ortho = subproblem.orthogonality_residual(mesh, coeffs, best.chi,
                                              best.u, best.p)

    relax = relaxation.relaxation_section(
        mesh, coeffs, bundle, masks, d, alpha_scheme,
        tol_den=cfg.tol_den, guard_scale=cfg.guard_scale)
    relax["theta_by_level"] = theta_by_level

    measures = youngmeasure.estimate_ym(mesh, windows, eps, best.chi,
                                        coeffs)
    ym = {
        "energy": youngmeasure.ym_energy_check(measures, windows,
                                               alpha_scheme),
        "second_moment": youngmeasure.second_moment_check(mesh, coeffs,
                                                          bundle, masks),
        "dirac": _dirac_block(
            youngmeasure.dirac_check(measures, masks,
                                     dirac_tol=cfg.dirac_tol)),
        "two_point_variance": youngmeasure.two_point_variance_check(
            mesh, coeffs, measures, windows, dist_tol=cfg.dist_tol),
    }

    testset = meshmod.default_test_functions(mesh)
    pairing = limitsmod.pairing_diagnostic(
        [{"mesh": m, "u": t.u, "p": t.p}
         for m, t in zip(meshes, best_by_level)],
        bundle, testset)

    report = {
        "version": VERSION,
        "config": cfg.echo(),
        "levels": level_blocks,
        "final": {
            "alpha_scheme": alpha_scheme,
            "duality": {"gap": float(dual.gap),
                        "ker_residual": float(dual.ker_residual),
                        "orthogonality_residual": float(ortho)},
            "algebraic_representations": alg,
            "fixed_point": bool(best.fixed_point),
        },
        "limits": {
            "n_windows": int(windows.n_windows),
            "psi_range": [float(bundle.psi_avg.min()),
                          float(bundle.psi_avg.max())],
            "partition": {
                "omega0_measure": float(
                    mesh.measures[masks.omega0_elem].sum()),
                "omega0_windows": int(masks.omega0_window.sum()),
                "w0_windows": int(masks.w0.sum()),
                "w0_plus_windows": int(masks.w0_plus.sum()),
                "w0_minus_windows": int(masks.w0_minus.sum()),
                "eta": float(masks.eta),
            },
        },
        "relaxation": relax,
        "young_measure": ym,
        "pairing_diagnostic": pairing,
    }
    t_end = time.perf_counter()
    timings = {"descent_seconds": t_descent - t0,
               "analysis_seconds": t_end - t_descent,
               "total_seconds": t_end - t0}
    return RunResult(cfg=cfg, report=report, meshes=meshes,
                     coeffs_by_level=coeffs_by_level,
                     traces_by_level=traces_by_level,
                     best_by_level=best_by_level, windows=windows,
                     bundle=bundle, masks=masks, measures=measures,
                     timings=timings)


def _dirac_block(rep):
    return {
        "windows": [int(w) for w in rep.windows],
        "variances": [float(v) for v in rep.variances],
        "threshold": float(rep.threshold),
        "all_passed": rep.all_passed,
    }


# -- deterministic JSON ---------------------------------------------------

def _json_scalar(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if x != x:
            return '"nan"'
        if x in (float("inf"), float("-inf")):
            return f'"{x}"'
        return format(x, ".17g")
    if isinstance(x, str):
        return '"' + x.replace("\\", "\\\\").replace('"', '\\"') \
            .replace("\n", "\\n") + '"'
    if x is None:
        return "null"
    raise TypeError(f"unserializable value {x!r}")


def to_json(obj, indent=0):
    """JSON with every float at 17 significant digits (deterministic)."""
    pad, pad_in = " " * indent, " " * (indent + 2)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad_in}{_json_scalar(str(k))}: '
                 f'{to_json(v, indent + 2)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not len(obj):
            return "[]"
        items = [pad_in + to_json(v, indent + 2) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, np.ndarray):
        return to_json(obj.tolist(), indent)
    return _json_scalar(obj)


def _slug(text):
    return re.sub(r"[^A-Za-z0-9]+", "-", text).strip("-")


# -- persistence ----------------------------------------------------------

def emit_outputs(result, outdir):
    """Write report.json, traces, field/measure dumps and plot data."""
    os.makedirs(outdir, exist_ok=True)
    cfg = result.cfg
    written = []

    def path(name):
        written.append(name)
        return os.path.join(outdir, name)

    with open(path("config.txt"), "w") as fh:
        fh.write("\n".join(cfg.raw_lines) + "\n")
    with open(path("report.json"), "w") as fh:
        fh.write(to_json(result.report) + "\n")
    with open(path("timing.txt"), "w") as fh:
        for k, v in result.timings.items():
            fh.write(f"{k} = {v:.6f}\n")

    best_steps = [s for t in result.best_by_level for s in t.steps]
    _write_csv(path("alpha_trace.csv"),
               ["level", "step", "alpha", "gap", "flips"],
               [[s["level"], s["step"], repr(float(s["alpha"])),
                 repr(float(s["gap"])), s["flips"]] for s in best_steps])
    for traces in result.traces_by_level:
        for t in traces:
            name = f"alpha_trace_L{t.level}_{_slug(t.seed_label)}.csv"
            _write_csv(path(name),
                       ["level", "step", "alpha", "gap", "flips"],
                       [[s["level"], s["step"], repr(float(s["alpha"])),
                         repr(float(s["gap"])), s["flips"]]
                        for s in t.steps])

    mesh = result.meshes[-1]
    best = result.best_by_level[-1]
    eps = mesh.symmetrized_gradient(best.u)
    meshmod.dump_node_field(path("u_finest.csv"), mesh, {"u": best.u})
    meshmod.dump_element_field(
        path("fields_finest.csv"), mesh,
        {"chi_a": best.chi.chi_a, "eps": eps, "p": best.p})
    _write_csv(
        path("limits_windows.csv"),
        (["window", "measure"]
         + [f"eps_avg_{k}" for k in range(mesh.n_comp)]
         + [f"p_avg_{k}" for k in range(mesh.n_comp)]
         + ["chia_avg", "chib_avg", "psi_avg"]),
        [[w, repr(float(result.windows.measures[w]))]
         + [repr(float(v)) for v in result.bundle.eps_avg[w]]
         + [repr(float(v)) for v in result.bundle.p_avg[w]]
         + [repr(float(result.bundle.chia_avg[w])),
            repr(float(result.bundle.chib_avg[w])),
            repr(float(result.bundle.psi_avg[w]))]
         for w in range(result.windows.n_windows)])
    _write_csv(
        path("young_measure.csv"),
        ["window_id", "weight"] + [f"lambda_{k}"
                                   for k in range(mesh.n_comp)],
        [[m.window, repr(float(wt))] + [repr(float(v)) for v in atom]
         for m in result.measures
         for wt, atom in zip(m.weights, m.atoms)])

    alphas = [s["alpha"] for s in best_steps]
    _write_csv(path("plot_alpha_vs_step.csv"), ["x", "y"],
               [[k, repr(float(a))] for k, a in enumerate(alphas)])
    thetas = result.report["relaxation"]["theta_by_level"]
    _write_csv(path("plot_theta_vs_level.csv"), ["x", "y"],
               [[lvl, "" if th is None else repr(float(th))]
                for lvl, th in enumerate(thetas)])
    return written


def _write_csv(fname, header, rows):
    with open(fname, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


# -- verification of persisted runs ---------------------------------------

def _read_csv(fname):
    with open(fname, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    cols = {name: np.array([r[i] for r in body], dtype=float)
            for i, name in enumerate(header)}
    return cols


def load_report(run_dir):
    import json
    with open(os.path.join(run_dir, "report.json")) as fh:
        return json.load(fh)


def load_run(run_dir):
    """Rebuild mesh, coefficients and finest fields from a run directory."""
    cfg = configmod.parse_config(os.path.join(run_dir, "config.txt"))
    meshes = cfg.build_meshes()
    mesh = meshes[-1]
    coeffs = cfg.build_coeffs(mesh)
    ucols = _read_csv(os.path.join(run_dir, "u_finest.csv"))
    u = np.stack([ucols[f"u_{k}"] for k in range(mesh.dim)], axis=1)
    fcols = _read_csv(os.path.join(run_dir, "fields_finest.csv"))
    chi = descent.PhaseField.from_a_indicator(fcols["chi_a"] > 0.5)
    p = np.stack([fcols[f"p_{k}"] for k in range(mesh.n_comp)], axis=1)
    return cfg, mesh, coeffs, u, chi, p


def verify_run(run_dir, tol=1e-10):
    """Re-evaluate every reported headline number from the dumps.

    Returns a dict of residuals; raises VerificationError when any
    recomputation drifts beyond `tol` (scaled)."""
    report = load_report(run_dir)
    cfg, mesh, coeffs, u, chi, p = load_run(run_dir)
    alpha_rep = report["final"]["alpha_scheme"]
    alpha_re = float(subproblem.direct_energy(mesh, coeffs, chi, u))
    p_re = subproblem.dual_variable(mesh, coeffs, chi, u)

    eps = mesh.symmetrized_gradient(u)
    windows = meshmod.build_windows(mesh, cfg.window)
    bundle = limitsmod.estimate_limits(mesh, windows, u, eps, p, chi)
    masks = limitsmod.partition_masks(mesh, coeffs, bundle, eta=cfg.eta)
    d = limitsmod.gap_d(mesh, coeffs, bundle, masks)
    relax = relaxation.relaxation_section(
        mesh, coeffs, bundle, masks, d, alpha_re,
        tol_den=cfg.tol_den, guard_scale=cfg.guard_scale)

    scale = 1.0 + abs(alpha_rep)
    checks = {
        "alpha_recomputed": alpha_re,
        "alpha_reported": alpha_rep,
        "alpha_residual": abs(alpha_re - alpha_rep),
        "p_residual": float(np.abs(p_re - p).max()),
        "d_residual": abs(d - report["relaxation"]["d"]),
        "theta_residual": abs(relax["theta_coeff1"]
                              - report["relaxation"]["theta_coeff1"]),
        "formula_residual": abs(
            relax["alpha_formula_coefficient_1"]
            - report["relaxation"]["alpha_formula_coefficient_1"]),
    }
    failed = [k for k in ("alpha_residual", "p_residual", "d_residual",
                          "theta_residual", "formula_residual")
              if checks[k] > tol * scale]
    checks["ok"] = not failed
    if failed:
        raise VerificationError(
            "verification residual exceeded: "
            + ", ".join(f"{k}={checks[k]:.3e}" for k in failed))
    return checks


def run_and_emit(cfg, outdir=None):
    """Convenience wrapper for the CLI: run, persist, return result."""
    result = run_experiment(cfg)
    emit_outputs(result, outdir or cfg.outdir)
    return result
