"""Alternating descent, oscillation seeding and refinement continuation.

The nonconvex energy is driven down by repeating {solve the convex
subproblem for frozen phases; reassign each element to its cheaper
phase}.  Plain alternation stagnates at non-global fixed points, so
laminate seeding (sawtooth displacements with strains at the wells) and
random multistart are provided, plus prolongation of the phase field to
a refined mesh so that the oscillation scale can shrink level by level.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import energy, mesh as meshmod, subproblem
from .errors import ConfigurationError


@dataclass
class PhaseField:
    chi_a: np.ndarray      # (n_elem,) in {0, 1}
    chi_b: np.ndarray

    def __post_init__(self):
        self.chi_a = np.asarray(self.chi_a, float)
        self.chi_b = np.asarray(self.chi_b, float)

    @property
    def psi(self):
        return self.chi_b - self.chi_a

    @classmethod
    def from_a_indicator(cls, is_a):
        is_a = np.asarray(is_a, bool)
        return cls(is_a.astype(float), (~is_a).astype(float))

    def flips(self, other):
        return int(np.sum(self.chi_a != other.chi_a))


@dataclass
class RunTrace:
    level: int
    seed_label: str
    steps: list = field(default_factory=list)
    fixed_point: bool = False
    budget_exhausted: bool = False
    u: np.ndarray | None = None
    chi: PhaseField | None = None
    p: np.ndarray | None = None

    @property
    def alpha(self):
        return self.steps[-1]["alpha"]

    @property
    def alphas(self):
        return [s["alpha"] for s in self.steps]


def assign_phases(coeffs, strain):
    """Elementwise argmin over the two phase energies (ties go to a)."""
    ea, eb = energy.well_energies(coeffs, strain)
    return PhaseField.from_a_indicator(ea <= eb)


def alternate(mesh, coeffs, init, budget=50, tol=1e-10, level=0,
              seed_label="init"):
    """Alternating minimization from a phase field or displacement seed.

    `init` is a dict with 'chi' (PhaseField) and/or 'u' (displacement);
    a displacement-only seed gets its phases from its own strain.
    """
    chi = init.get("chi")
    if chi is None:
        chi = assign_phases(coeffs, mesh.symmetrized_gradient(init["u"]))
    trace = RunTrace(level=level, seed_label=seed_label)
    for step in range(budget):
        problem = subproblem.assemble(mesh, coeffs, chi)
        u, srep = subproblem.solve(problem, tol=tol)
        p = subproblem.dual_variable(mesh, coeffs, chi, u)
        drep = subproblem.duality_report(mesh, coeffs, chi, u, p,
                                         alpha=srep.alpha)
        new_chi = assign_phases(coeffs, mesh.symmetrized_gradient(u))
        flips = chi.flips(new_chi)
        trace.steps.append({
            "level": level,
            "step": step,
            "alpha": srep.alpha,
            "gap": drep.gap,
            "ker_residual": drep.ker_residual,
            "flips": flips,
            "cg_iterations": srep.iterations,
            "cg_residual": srep.residual,
        })
        trace.u, trace.chi, trace.p = u, chi, p
        if flips == 0:
            trace.fixed_point = True
            break
        chi = new_chi
    else:
        trace.budget_exhausted = True
    return trace


def rank_one_decompose(M):
    """Split a symmetric 2x2 matrix into sym(eta (x) nu), if possible.

    Works exactly when det(M) <= 0.  Returns (eta, nu) or None.
    """
    mu, V = np.linalg.eigh(M)
    scale = max(abs(mu[0]), abs(mu[1]), 1.0)
    if mu[0] * mu[1] > 1e-12 * scale ** 2:
        return None
    lo, hi = np.sqrt(max(-mu[0], 0.0)), np.sqrt(max(mu[1], 0.0))
    eta = hi * V[:, 1] - lo * V[:, 0]
    nu = hi * V[:, 1] + lo * V[:, 0]
    return eta, nu


def _sawtooth(xi, period, t, sigma1, sigma2):
    """Periodic piecewise-linear profile with slope sigma1 on the first
    t-fraction of each period and sigma2 on the rest; zero at period ends
    whenever t*sigma1 + (1-t)*sigma2 = 0."""
    xm = np.mod(xi, period)
    return sigma1 * np.minimum(xm, t * period) \
        + sigma2 * np.maximum(xm - t * period, 0.0)


def laminate_seed(mesh, coeffs, period_elements, direction=None):
    """Sawtooth displacement whose strains alternate at the two wells.

    Needs constant coefficients with rank-one-compatible wells; the
    volume fraction t is chosen so the mean strain vanishes (projected to
    [0, 1] best-effort otherwise).  Returns (u, chi, info) or
    (None, None, info) when the wells are incompatible.
    """
    if period_elements < 1:
        raise ConfigurationError("laminate period must be >= 1 element")
    if np.any(mesh.shape % period_elements != 0):
        raise ConfigurationError(
            f"laminate period {period_elements} does not divide the "
            f"element counts {tuple(mesh.shape)}")
    C, D = coeffs.C[0], coeffs.D[0]
    delta = C - D
    dn2 = float(mesh.frob_dot(delta, delta))
    info = {"compatible": True, "t": None, "direction": None}
    if dn2 == 0.0:
        info["compatible"] = False
        info["reason"] = "coinciding wells"
        return None, None, info
    t_raw = float(mesh.frob_dot(delta, -D)) / dn2
    t = min(max(t_raw, 0.0), 1.0)
    info["t"] = t
    info["exact_mean_zero"] = bool(
        np.allclose(t * C + (1.0 - t) * D, 0.0, atol=1e-12 * np.sqrt(dn2)))

    h = mesh.extents / mesh.shape
    if mesh.dim == 1:
        period = period_elements * h[0]
        xi = mesh.nodes[:, 0]
        s = _sawtooth(xi, period, t, -(1.0 - t) * delta[0], t * delta[0])
        u = s[:, None].copy()
        info["direction"] = "x"
    else:
        M = np.array([[delta[0], delta[1]], [delta[1], delta[2]]])
        dec = rank_one_decompose(M)
        if dec is None:
            info["compatible"] = False
            info["reason"] = "det(C - D) > 0: incompatible wells"
            return None, None, info
        eta, nu = dec
        axes = {"x": np.array([1.0, 0.0]), "y": np.array([0.0, 1.0])}
        # eta and nu are interchangeable as layer normal; prefer the one
        # closest to the requested (or any) grid axis
        best = None
        for name, ax in axes.items():
            for cand_nu, cand_eta in ((nu, eta), (eta, nu)):
                nhat = cand_nu / np.linalg.norm(cand_nu)
                score = abs(nhat @ ax)
                if direction in (None, name):
                    if best is None or score > best[0]:
                        best = (score, name, cand_nu, cand_eta)
        _, axis_name, nu, eta = best
        nu_norm = np.linalg.norm(nu)
        nhat = nu / nu_norm
        period = period_elements * h[0 if axis_name == "x" else 1]
        xi = mesh.nodes @ nhat
        s = _sawtooth(xi, period, t,
                      -(1.0 - t) * nu_norm, t * nu_norm)
        u = np.outer(s, eta)
        info["direction"] = axis_name
    u[mesh.boundary_mask] = 0.0
    chi = assign_phases(coeffs, mesh.symmetrized_gradient(u))
    return u, chi, info


def random_phase(mesh, rng):
    """Independent fair coin per element."""
    return PhaseField.from_a_indicator(rng.random(mesh.n_elem) < 0.5)


def build_seed(mesh, coeffs, spec, rng):
    """Turn a seed spec string into an init dict for `alternate`.

    Recognized: 'zero', 'random', 'laminate', 'laminate:<period>',
    'laminate-perturbed:<fraction>' (optionally ':<period>').
    """
    name, _, arg = spec.partition(":")
    if name == "zero":
        u = mesh.zero_displacement()
        return {"u": u,
                "chi": assign_phases(coeffs, mesh.symmetrized_gradient(u))}
    if name == "random":
        return {"chi": random_phase(mesh, rng)}
    if name in ("laminate", "laminate-perturbed"):
        if name == "laminate-perturbed":
            frac_s, _, per_s = arg.partition(":")
            frac = float(frac_s) if frac_s else 0.05
            period = int(per_s) if per_s else 2
        else:
            frac = 0.0
            period = int(arg) if arg else 2
        u, chi, info = laminate_seed(mesh, coeffs, period)
        if u is None:
            return {"chi": random_phase(mesh, rng), "fallback": info}
        if frac > 0.0:
            flip = rng.random(mesh.n_elem) < frac
            chi_a = np.where(flip, 1.0 - chi.chi_a, chi.chi_a)
            chi = PhaseField(chi_a, 1.0 - chi_a)
            return {"chi": chi, "laminate_info": info}
        return {"u": u, "chi": chi, "laminate_info": info}
    raise ConfigurationError(f"unknown seed spec {spec!r}")


def multistart(mesh, coeffs, seed_specs, rng, budget=50, tol=1e-10,
               level=0):
    """Run `alternate` from every seed and keep them all; the first
    element of the returned list is the best (smallest final alpha,
    ties broken by seed order)."""
    if not seed_specs:
        raise ConfigurationError("at least one seed is required")
    traces = []
    for idx, spec in enumerate(seed_specs):
        init = build_seed(mesh, coeffs, spec, rng)
        traces.append(alternate(mesh, coeffs, init, budget=budget, tol=tol,
                                level=level, seed_label=spec))
    order = sorted(range(len(traces)),
                   key=lambda i: (traces[i].alpha, i))
    return [traces[i] for i in order]


def refine_continue(coarse_mesh, fine_mesh, trace):
    """Initialization for the next level: phases prolonged to children."""
    chi_a = meshmod.prolong_element_field(coarse_mesh, fine_mesh,
                                          trace.chi.chi_a)
    return {"chi": PhaseField(chi_a, 1.0 - chi_a)}
