"""Window-averaged weak-limit estimates, set partitions and the gap scalar.

Oscillating fields do not converge pointwise; their weak limits are
approximated by measure-weighted means over spatial windows of fixed
physical size at the finest refinement level.  The same windows feed the
relaxation formulas and the Young-measure estimator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import energy
from .mesh import window_average, window_expand


@dataclass
class LimitBundle:
    windows: object
    eps_avg: np.ndarray       # (n_w, n_comp)
    p_avg: np.ndarray         # (n_w, n_comp)
    chia_avg: np.ndarray      # (n_w,)
    chib_avg: np.ndarray
    psi_avg: np.ndarray
    u_lim: np.ndarray         # finest-level nodal displacement
    eps_raw: np.ndarray       # finest-level per-element strain
    p_raw: np.ndarray
    chi_raw: object


@dataclass
class PartitionMasks:
    omega0_elem: np.ndarray     # per element: a == b
    omega0_window: np.ndarray   # window fully inside Omega_0
    w0_plus: np.ndarray         # per window: psi_avg >= 1 - 2 eta
    w0_minus: np.ndarray        # per window: psi_avg <= -1 + 2 eta
    w0: np.ndarray              # union (min(chia, chib) <= eta)
    eta: float


def estimate_limits(mesh, windows, u, strain, p, chi):
    """Window means of the oscillating fields; u itself converges
    strongly, so the nodal field is kept as-is."""
    return LimitBundle(
        windows=windows,
        eps_avg=window_average(strain, mesh, windows),
        p_avg=window_average(p, mesh, windows),
        chia_avg=window_average(chi.chi_a, mesh, windows),
        chib_avg=window_average(chi.chi_b, mesh, windows),
        psi_avg=window_average(chi.psi, mesh, windows),
        u_lim=u,
        eps_raw=strain,
        p_raw=p,
        chi_raw=chi,
    )


def partition_masks(mesh, coeffs, bundle, eta=0.05, tol_eq=None):
    """Omega_0 (equal moduli, per element) and the purity sets (per
    window, threshold eta on the limiting phase fractions)."""
    omega0 = energy.omega0_mask(coeffs, tol_eq)
    w = bundle.windows
    om0_w = np.ones(w.n_windows, dtype=bool)
    np.minimum.at(om0_w, w.elem_window, omega0)
    plus = bundle.psi_avg >= 1.0 - 2.0 * eta
    minus = bundle.psi_avg <= -1.0 + 2.0 * eta
    union = np.minimum(bundle.chia_avg, bundle.chib_avg) <= eta
    return PartitionMasks(omega0, om0_w, plus, minus, union, eta)


def gap_d(mesh, coeffs, bundle, masks):
    """Oscillation gap over Omega_0: second moments minus squared means.

    Nonnegative up to tolerance (Jensen per window).
    """
    om0 = masks.omega0_elem
    sec = mesh.frob_norm2(bundle.eps_raw)
    mean2 = mesh.frob_norm2(window_expand(bundle.eps_avg, bundle.windows))
    d = float((mesh.measures * coeffs.a * (sec - mean2) * om0).sum())
    return d


def pairing_diagnostic(levels, bundle, testset):
    """Residuals of  int phi p.eps(u)  against the windowed limit
    surrogate, per test bump and refinement level.

    `levels` is a list of dicts with keys mesh, u, p (coarsest first);
    the limit side comes from the finest-level window averages.
    """
    w = bundle.windows
    lim_dens = (bundle.windows.measures
                * _fdot(levels[-1]["mesh"], bundle.p_avg, bundle.eps_avg))
    phi_w = testset.values_at(w.centers)           # (n_test, n_w)
    lim_vals = phi_w @ lim_dens                    # (n_test,)

    table = []
    for lvl, data in enumerate(levels):
        mesh = data["mesh"]
        eps = mesh.symmetrized_gradient(data["u"])
        dens = mesh.measures * mesh.frob_dot(data["p"], eps)
        phi_e = testset.values_at(mesh.centers)
        vals = phi_e @ dens
        for tix in range(testset.n_test):
            table.append({
                "test": tix,
                "level": lvl,
                "value": float(vals[tix]),
                "limit": float(lim_vals[tix]),
                "residual": float(abs(vals[tix] - lim_vals[tix])),
            })
    flags = []
    if len(levels) >= 2:
        for tix in range(testset.n_test):
            rs = [row["residual"] for row in table if row["test"] == tix]
            # slack absorbs the window-discretization noise floor once
            # the residual has plateaued
            slack = max(1e-8, 0.01 * rs[-2])
            flags.append(bool(rs[-1] > rs[-2] + slack))
    return {"rows": table, "non_decreasing_flags": flags}


def _fdot(mesh, x, y):
    return ((np.asarray(x) * np.asarray(y)) * mesh.frob_w).sum(axis=-1)
