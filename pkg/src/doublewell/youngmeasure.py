"""Empirical parametrized Young measures per spatial window.

The strain statistics of the finest-level minimizing iterate are
summarized per window as a weighted atomic measure on symmetric-matrix
space.  Verified against it: the energy representation through the
nonconvex density, the second-moment/gap relation, and the Dirac
property on the pure-phase set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import energy
from .mesh import window_expand


@dataclass
class WindowMeasure:
    window: int
    weights: np.ndarray        # (n_atoms,) nonnegative, sum 1
    atoms: np.ndarray          # (n_atoms, n_comp) strains
    chia_weight: float         # phase-split mass from the indicators
    chib_weight: float
    first_moment: np.ndarray   # (n_comp,)
    second_moment_a: float     # int a |lambda|^2 dnu
    h_moment: float            # int h dnu
    variance: float            # int |lambda - mean|^2 dnu (Frobenius)


@dataclass
class DiracReport:
    windows: np.ndarray
    variances: np.ndarray
    threshold: float
    passed: np.ndarray

    @property
    def all_passed(self):
        return bool(self.passed.all()) if self.passed.size else True


def estimate_ym(mesh, windows, strain, chi, coeffs):
    """One atomic measure per window, atoms at the element strains with
    measure-proportional weights."""
    strain = mesh.check_element_field(strain)
    h = energy.h_density(coeffs, strain)
    a_l2 = coeffs.a * mesh.frob_norm2(strain)
    measures = []
    for widx in range(windows.n_windows):
        sel = windows.elem_window == widx
        wts = mesh.measures[sel] / windows.measures[widx]
        atoms = strain[sel]
        mean = (wts[:, None] * atoms).sum(axis=0)
        var = float((wts * mesh.frob_norm2(atoms - mean)).sum())
        measures.append(WindowMeasure(
            window=widx,
            weights=wts,
            atoms=atoms,
            chia_weight=float((wts * chi.chi_a[sel]).sum()),
            chib_weight=float((wts * chi.chi_b[sel]).sum()),
            first_moment=mean,
            second_moment_a=float((wts * a_l2[sel]).sum()),
            h_moment=float((wts * h[sel]).sum()),
            variance=var,
        ))
    return measures


def ym_energy_check(measures, windows, alpha_scheme):
    """Residual of  alpha = int int h(x, lambda) dnu_x dx."""
    total = sum(windows.measures[m.window] * m.h_moment for m in measures)
    return {"ym_energy": float(total),
            "alpha_scheme": float(alpha_scheme),
            "residual": float(abs(total - alpha_scheme))}


def second_moment_check(mesh, coeffs, bundle, masks):
    """Second moments vs squared means of the strain over Omega_0.

    The difference is the oscillation gap d by construction (identical
    data, two summation orders).
    """
    om0 = masks.omega0_elem
    sec = float((mesh.measures * coeffs.a
                 * mesh.frob_norm2(bundle.eps_raw) * om0).sum())
    mean2 = float((mesh.measures * coeffs.a
                   * mesh.frob_norm2(window_expand(bundle.eps_avg,
                                                   bundle.windows))
                   * om0).sum())
    return {"second_moment": sec, "squared_mean": mean2,
            "difference": sec - mean2}


def dirac_check(measures, masks, dirac_tol=None):
    """Strain variance per pure-phase window must vanish (Dirac measure)."""
    sel = np.nonzero(masks.w0)[0]
    variances = np.array([measures[w].variance for w in sel])
    if dirac_tol is None:
        max_sec = max((m.second_moment_a for m in measures), default=0.0)
        dirac_tol = 1e-6 * (1.0 + max_sec)
    return DiracReport(windows=sel, variances=variances,
                       threshold=float(dirac_tol),
                       passed=variances <= dirac_tol)


def two_point_variance_check(mesh, coeffs, measures, windows,
                             dist_tol=None):
    """For windows whose atoms sit at the wells, the a-weighted gap must
    equal  a chia chib |C - D|^2  (variance of a two-point law).

    Returns per-window rows; windows with off-well atoms are skipped.
    """
    rows = []
    for m in measures:
        sel = windows.elem_window == m.window
        C = coeffs.C[sel]
        D = coeffs.D[sel]
        a = coeffs.a[sel]
        cd2 = mesh.frob_norm2(C - D)
        if dist_tol is None:
            tol = 1e-3 * (1.0 + np.sqrt(cd2.max() if cd2.size else 0.0))
        else:
            tol = dist_tol
        da = np.sqrt(mesh.frob_norm2(m.atoms + C))
        db = np.sqrt(mesh.frob_norm2(m.atoms + D))
        if not np.all(np.minimum(da, db) <= tol):
            continue
        gap = m.second_moment_a - float(
            (m.weights * a).sum() / m.weights.sum()
        ) * float(mesh.frob_norm2(m.first_moment))
        predicted = float((m.weights * a * cd2).sum()) \
            * m.chia_weight * m.chib_weight
        rows.append({"window": m.window, "gap": float(gap),
                     "predicted": predicted})
    return rows
