"""Relaxation-formula evaluators and a certified dual lower bound.

All formulas express the nonconvex infimum through the weak limits
(window averages) of the minimizing sequence, its dual fields and phase
fractions, plus the scalar oscillation gap d.  Two conventions for the
gap term are evaluated side by side: kappa = -theta/2 (coefficient-half)
and kappa = -theta (coefficient-1, i.e. substitute theta -> 2 theta);
the analytic 1D laminates satisfy the latter with theta in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .mesh import window_expand


@dataclass
class ThetaEstimate:
    d: float
    denominator: float
    theta_half: float        # 2 d / den  (kappa = -theta/2 convention)
    theta_coeff1: float       # d / den
    zero_branch: bool
    half_in_range: bool
    coeff1_in_range: bool

    def verdict(self):
        if self.coeff1_in_range:
            return "coefficient-1"
        if self.half_in_range:
            return "coefficient-half"
        return "none"


def theta_estimate(d, den, tol_den):
    if den <= tol_den:
        return ThetaEstimate(float(d), float(den), 0.0, 0.0, True,
                             True, True)
    tp = 2.0 * d / den
    tc = d / den
    return ThetaEstimate(float(d), float(den), float(tp), float(tc), False,
                         bool(-1e-10 <= tp <= 1.0 + 1e-10),
                         bool(-1e-10 <= tc <= 1.0 + 1e-10))


def gap_denominator(mesh, coeffs, bundle, masks):
    """int over Omega_0 of  chia chib a |C - D|^2  (window fractions)."""
    om0 = masks.omega0_elem
    chia = window_expand(bundle.chia_avg, bundle.windows)
    chib = window_expand(bundle.chib_avg, bundle.windows)
    cd2 = mesh.frob_norm2(coeffs.C - coeffs.D)
    return float((mesh.measures * chia * chib * coeffs.a * cd2 * om0).sum())


def _off_omega0_weights(mesh, coeffs, masks, guard_scale):
    a, b = coeffs.a, coeffs.b
    delta_guard = guard_scale * (a.max() + b.max())
    off0 = ~masks.omega0_elem
    guarded = off0 & (np.abs(a - b) >= delta_guard)
    excluded = float(mesh.measures[off0 & ~guarded].sum())
    return guarded, excluded


def eval_I(mesh, coeffs, bundle, masks, guard_scale=1e-8):
    """The off-Omega_0 limit integral (guard zone excised and reported)."""
    guarded, excluded = _off_omega0_weights(mesh, coeffs, masks, guard_scale)
    if not guarded.any():
        return {"value": 0.0, "excluded_measure": excluded}
    a, b = coeffs.a, coeffs.b
    dba = np.where(guarded, b - a, 1.0)
    ab_ = a * b
    CD = coeffs.C - coeffs.D
    eps = window_expand(bundle.eps_avg, bundle.windows)
    p = window_expand(bundle.p_avg, bundle.windows)
    psi = window_expand(bundle.psi_avg, bundle.windows)
    dens = (mesh.frob_dot((ab_ / dba)[:, None] * CD, eps)
            + mesh.frob_dot((b[:, None] * coeffs.D
                             - a[:, None] * coeffs.C) / dba[:, None], p)
            + ab_ * (mesh.frob_norm2(coeffs.C)
                     - mesh.frob_norm2(coeffs.D)) / (2.0 * dba)
            - psi * ab_ * mesh.frob_norm2(CD) / (2.0 * dba))
    return {"value": float((mesh.measures * dens * guarded).sum()),
            "excluded_measure": excluded}


def _gap_coefficients(theta, convention):
    """Coefficients of the gap integral in the three representations and
    the main formula (which shares the first one).

    Coefficient-half: -theta/2, (2-theta)/2, (1-theta)/2.  Coefficient-1
    variant: substitute theta -> 2 theta, i.e. -theta, 1-theta, 1/2-theta.
    """
    if convention == "coefficient-half":
        tp = theta
    elif convention == "coefficient-1":
        tp = 2.0 * theta
    else:
        raise ValueError(f"unknown convention {convention!r}")
    return -tp / 2.0, (2.0 - tp) / 2.0, (1.0 - tp) / 2.0


def _omega0_pieces(mesh, coeffs, bundle, masks):
    om0 = masks.omega0_elem
    w = mesh.measures
    a = coeffs.a
    eps = window_expand(bundle.eps_avg, bundle.windows)
    p = window_expand(bundle.p_avg, bundle.windows)
    psi = window_expand(bundle.psi_avg, bundle.windows)
    C2 = mesh.frob_norm2(coeffs.C)
    D2 = mesh.frob_norm2(coeffs.D)
    Aps = ((a[:, None] * (coeffs.C + coeffs.D) / 2.0)
           + psi[:, None] * (a[:, None] * (coeffs.D - coeffs.C) / 2.0))
    B0 = a * (C2 + D2) / 2.0 + psi * a * (D2 - C2) / 2.0
    return {
        "tilt_eps": float((w * mesh.frob_dot(Aps, eps) * om0).sum()),
        "B0": float((w * B0 * om0).sum()),
        "a_eps2": float((w * a * mesh.frob_norm2(eps) * om0).sum()),
        "p_eps": float((w * mesh.frob_dot(p, eps) * om0).sum()),
        "p2_over_a": float((w * mesh.frob_norm2(p) / a * om0).sum()),
    }


def eval_limit_formula(mesh, coeffs, bundle, masks, theta, convention,
              guard_scale=1e-8):
    """The main relaxation formula for the infimum.

    Every term carries a global factor 1/2: the limit inequalities the
    formula is squeezed between have 1/2 prefactors throughout, and only
    with the factor does the formula reproduce the analytic convex value
    (without it, it evaluates to twice the infimum).
    """
    pieces = _omega0_pieces(mesh, coeffs, bundle, masks)
    off = eval_I(mesh, coeffs, bundle, masks, guard_scale)
    den = gap_denominator(mesh, coeffs, bundle, masks)
    kappa, _, _ = _gap_coefficients(theta, convention)
    return 0.5 * (pieces["tilt_eps"] + pieces["B0"] + off["value"]
                  + kappa * den)


def eval_representations(mesh, coeffs, bundle, masks, theta, convention,
                         guard_scale=1e-8):
    """The three equivalent re-expressions of the relaxation formula
    (same global 1/2 as eval_limit_formula)."""
    pieces = _omega0_pieces(mesh, coeffs, bundle, masks)
    off = eval_I(mesh, coeffs, bundle, masks, guard_scale)["value"]
    den = gap_denominator(mesh, coeffs, bundle, masks)
    k1, k2, k3 = _gap_coefficients(theta, convention)
    rep_a = 0.5 * (-pieces["a_eps2"] + pieces["B0"] + pieces["p_eps"]
                   + off + k1 * den)
    rep_b = 0.5 * (pieces["p2_over_a"] - pieces["p_eps"] + off + k2 * den)
    rep_c = 0.5 * (0.5 * (pieces["p2_over_a"] - pieces["a_eps2"]
                          + pieces["B0"])
                   + off + k3 * den)
    return {"rep_a": float(rep_a), "rep_b": float(rep_b),
            "rep_c": float(rep_c)}


def inequality_chain(mesh, coeffs, bundle, masks, alpha_scheme,
                     guard_scale=1e-8):
    """Residuals of the three-member inequality chain under two
    coefficient readings: full and half (the full constants fail the
    analytic 1D oracles; both readings are reported, neither asserted).
    """
    pieces = _omega0_pieces(mesh, coeffs, bundle, masks)
    off = eval_I(mesh, coeffs, bundle, masks, guard_scale)["value"]
    left = -0.5 * pieces["a_eps2"] + pieces["p_eps"]
    mid_full = (alpha_scheme + 0.5 * pieces["p_eps"] - off
                   - pieces["B0"])
    mid_half = (alpha_scheme + 0.5 * pieces["p_eps"] - 0.5 * off
                - 0.5 * pieces["B0"])
    right = 0.5 * (pieces["p2_over_a"]
                   - _tilt_sq_over_a(mesh, coeffs, bundle, masks))
    return {
        "left": float(left),
        "middle_full": float(mid_full),
        "middle_half": float(mid_half),
        "right": float(right),
        "full_violation": float(max(mid_full - left,
                                       right - mid_full, 0.0)),
        "half_violation": float(max(mid_half - left,
                                    right - mid_half, 0.0)),
    }


def _tilt_sq_over_a(mesh, coeffs, bundle, masks):
    om0 = masks.omega0_elem
    a = coeffs.a
    psi = window_expand(bundle.psi_avg, bundle.windows)
    Ap = (a[:, None] * (coeffs.C + coeffs.D)) / 2.0
    Am = (a[:, None] * (coeffs.D - coeffs.C)) / 2.0
    dens = (mesh.frob_norm2(Ap) + mesh.frob_norm2(Am)
            + 2.0 * psi * mesh.frob_dot(Ap, Am)) / a
    return float((mesh.measures * dens * om0).sum())


def dual_lower_bound(mesh, coeffs, grid_points=9, polish=True):
    """Certified lower bound from constant dual fields.

    For any constant q,  alpha >= -int max over the two phases of the
    conjugate densities; the bound is concave in q, maximized by a coarse
    grid plus a local simplex polish.
    """
    w = mesh.measures
    fw = mesh.frob_w
    a, b, C, D = coeffs.a, coeffs.b, coeffs.C, coeffs.D

    def bound(q):
        q = np.asarray(q, float)
        q2 = ((q * q) * fw).sum()
        qC = (q[None, :] * C * fw).sum(axis=1)
        qD = (q[None, :] * D * fw).sum(axis=1)
        dens = np.maximum(q2 / (2.0 * a) - qC, q2 / (2.0 * b) - qD)
        return -float((w * dens).sum())

    scale = max(
        float(np.max(a * np.sqrt(mesh.frob_norm2(C)))),
        float(np.max(b * np.sqrt(mesh.frob_norm2(D)))), 1.0)
    axes = [np.linspace(-2.0 * scale, 2.0 * scale, grid_points)] \
        * mesh.n_comp
    grids = np.meshgrid(*axes, indexing="ij")
    cands = np.stack([g.ravel() for g in grids], axis=1)
    vals = np.array([bound(q) for q in cands])
    best_idx = int(np.argmax(vals))
    q_best, val_best = cands[best_idx], vals[best_idx]
    if polish:
        res = optimize.minimize(lambda q: -bound(q), q_best,
                                method="Nelder-Mead",
                                options={"xatol": 1e-12, "fatol": 1e-14,
                                         "maxiter": 4000})
        if -res.fun > val_best:
            q_best, val_best = res.x, -res.fun
    return {"bound": float(val_best), "q": [float(v) for v in q_best]}


def relaxation_section(mesh, coeffs, bundle, masks, d, alpha_scheme,
                       tol_den=None, guard_scale=1e-8):
    """Assemble the full relaxation block of the run report."""
    den = gap_denominator(mesh, coeffs, bundle, masks)
    if tol_den is None:
        cd2 = mesh.frob_norm2(coeffs.C - coeffs.D)
        tol_den = 1e-12 * float((mesh.measures * coeffs.a * cd2).sum())
    est = theta_estimate(d, den, tol_den)
    out = {
        "d": float(d),
        "denominator": float(den),
        "theta_half": est.theta_half,
        "theta_coeff1": est.theta_coeff1,
        "theta_zero_branch": est.zero_branch,
        "theta_half_in_range": est.half_in_range,
        "theta_coeff1_in_range": est.coeff1_in_range,
        "convention_verdict": est.verdict(),
        "alpha_scheme": float(alpha_scheme),
        "I_term": eval_I(mesh, coeffs, bundle, masks, guard_scale),
        "inequality_chain": inequality_chain(mesh, coeffs, bundle, masks,
                                             alpha_scheme, guard_scale),
        "lower_bound": dual_lower_bound(mesh, coeffs),
    }
    for conv, theta in (("coefficient-half", est.theta_half),
                        ("coefficient-1", est.theta_coeff1)):
        main = eval_limit_formula(mesh, coeffs, bundle, masks, theta, conv,
                         guard_scale)
        reps = eval_representations(mesh, coeffs, bundle, masks, theta,
                                    conv, guard_scale)
        key = conv.replace("-", "_")
        out[f"alpha_formula_{key}"] = float(main)
        out[f"alpha_residual_{key}"] = float(abs(main - alpha_scheme))
        out[f"representations_{key}"] = reps
    bnd = out["lower_bound"]["bound"]
    out["lower_bound_gap"] = float(alpha_scheme - bnd)
    out["stuck_suspected"] = bool(
        alpha_scheme - bnd > 1e-3 * (1.0 + abs(alpha_scheme)))
    return out
