"""Assembly and solution of the convex subproblem for frozen phases.

With the phase indicators fixed, the energy is the convex quadratic

    J(v) = int [ 0.5 m |eps(v)|^2 + E . eps(v) + 0.5 B ] dx

with m = chi_a a + chi_b b and E = chi_a aC + chi_b bD.  Discretely this
is 0.5 v.Kv + f.v + c over the interior degrees of freedom; the minimizer
solves K u = -f.  The dual variable p = m eps(u) + E lies (discretely) in
the kernel of the adjoint strain operator, and -I(p) recovers the primal
value: zero duality gap.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import energy
from .errors import SolverError


@dataclass
class QuadraticProblem:
    mesh: object
    K: sp.csr_matrix          # interior-dof operator
    f: np.ndarray             # interior-dof load
    c: float                  # constant term 0.5 * int B
    free_nodes: np.ndarray

    @property
    def n_dof(self):
        return self.f.shape[0]

    def to_full(self, x):
        u = self.mesh.zero_displacement()
        u[self.free_nodes] = x.reshape(-1, self.mesh.dim)
        return u

    def to_interior(self, u):
        return u[self.free_nodes].ravel()

    def energy(self, u):
        x = self.to_interior(self.mesh.check_displacement(u))
        return float(0.5 * x @ (self.K @ x) + self.f @ x + self.c)


@dataclass
class SolveReport:
    iterations: int
    residual: float
    alpha: float
    wall_time: float


@dataclass
class DualityReport:
    alpha: float
    beta: float
    gap: float
    ker_residual: float


def direct_energy(mesh, coeffs, chi, u):
    """J(u) by direct elementwise quadrature (assembly-free oracle path)."""
    eps = mesh.symmetrized_gradient(u)
    m = energy.m_field(coeffs, chi)
    E = energy.tilt_field(coeffs, chi)
    B = energy.B_field(coeffs, chi.psi)
    dens = 0.5 * m * mesh.frob_norm2(eps) + mesh.frob_dot(E, eps) + 0.5 * B
    return mesh.integrate(dens)


def assemble(mesh, coeffs, chi):
    """Build the interior-dof quadratic form for fixed phases."""
    m = energy.m_field(coeffs, chi)
    E = energy.tilt_field(coeffs, chi)
    B = energy.B_field(coeffs, chi.psi)
    nd = (mesh.dim + 1) * mesh.dim

    gw = mesh.grad * mesh.frob_w[None, :, None]
    local_K = np.einsum("eck,ecl->ekl", gw, mesh.grad)
    local_K *= (mesh.measures * m)[:, None, None]
    local_f = np.einsum("eck,ec->ek", gw, E) * mesh.measures[:, None]

    # global dof id = node * dim + comp, then restrict to interior
    elem_dof = (mesh.elements[:, :, None] * mesh.dim
                + np.arange(mesh.dim)[None, None, :]).reshape(mesh.n_elem, nd)
    rows = np.repeat(elem_dof, nd, axis=1).ravel()
    cols = np.tile(elem_dof, (1, nd)).ravel()
    K_full = sp.coo_matrix((local_K.ravel(), (rows, cols)),
                           shape=(mesh.n_nodes * mesh.dim,) * 2).tocsr()
    f_full = np.zeros(mesh.n_nodes * mesh.dim)
    np.add.at(f_full, elem_dof.ravel(), local_f.ravel())

    free = mesh.free_nodes
    free_dof = (free[:, None] * mesh.dim
                + np.arange(mesh.dim)[None, :]).ravel()
    K = K_full[np.ix_(free_dof, free_dof)].tocsr()
    f = f_full[free_dof]
    c = 0.5 * mesh.integrate(B)
    return QuadraticProblem(mesh, K, f, c, free)


def solve(problem, tol=1e-10, max_iter=None):
    """Minimize the quadratic by Jacobi-preconditioned conjugate gradients."""
    t0 = time.perf_counter()
    if problem.n_dof == 0 or np.linalg.norm(problem.f) == 0.0:
        u = problem.to_full(np.zeros(problem.n_dof))
        return u, SolveReport(0, 0.0, problem.energy(u),
                              time.perf_counter() - t0)
    if max_iter is None:
        max_iter = 20 * problem.n_dof
    diag = problem.K.diagonal()
    precond = spla.LinearOperator(problem.K.shape,
                                  matvec=lambda x: x / diag)
    count = [0]

    def cb(_):
        count[0] += 1

    x, info = spla.cg(problem.K, -problem.f, rtol=tol, atol=0.0,
                      maxiter=max_iter, M=precond, callback=cb)
    res = np.linalg.norm(problem.K @ x + problem.f) / np.linalg.norm(problem.f)
    if info != 0 or res > tol:
        raise SolverError(
            f"conjugate gradients did not reach tol={tol:g} "
            f"(residual {res:.3e} after {count[0]} iterations)",
            residual=res, iterations=count[0])
    u = problem.to_full(x)
    return u, SolveReport(count[0], float(res), problem.energy(u),
                          time.perf_counter() - t0)


def dual_variable(mesh, coeffs, chi, u):
    """Optimal dual field p = m eps(u) + E, per element."""
    eps = mesh.symmetrized_gradient(u)
    m = energy.m_field(coeffs, chi)
    return m[:, None] * eps + energy.tilt_field(coeffs, chi)


def ker_residual(mesh, coeffs, chi, p):
    """Max normalized pairing of p against the interior nodal basis.

    The natural normalization |<p, eps(phi_i)>| / (|p| |eps(phi_i)|)
    degenerates when the optimal dual field vanishes (e.g. an exact
    laminate), so the denominator is floored by the L2 size of the
    inhomogeneity E that defines p.
    """
    p = mesh.check_element_field(p)
    r = np.zeros((mesh.n_nodes, mesh.dim))
    gw = mesh.grad * mesh.frob_w[None, :, None]
    local = np.einsum("eck,ec->ek", gw, p) * mesh.measures[:, None]
    nd = (mesh.dim + 1) * mesh.dim
    rows = np.repeat(mesh.elements, mesh.dim, axis=1).reshape(mesh.n_elem, nd)
    cols = np.tile(np.arange(mesh.dim), mesh.dim + 1)
    np.add.at(r, (rows.ravel(), np.tile(cols, mesh.n_elem)), local.ravel())

    free = mesh.free_nodes
    norms = mesh.basis_strain_norms()[free]
    p_scale = max(mesh.l2_norm(p),
                  mesh.l2_norm(energy.tilt_field(coeffs, chi)), 1e-300)
    ratios = np.abs(r[free]) / np.maximum(norms * p_scale, 1e-300)
    return float(ratios.max()) if ratios.size else 0.0


def dual_objective(mesh, coeffs, chi, q):
    """Dual functional I(q) = int [ |q - E|^2 / (2m) - 0.5 B ] dx."""
    q = mesh.check_element_field(q)
    m = energy.m_field(coeffs, chi)
    E = energy.tilt_field(coeffs, chi)
    B = energy.B_field(coeffs, chi.psi)
    dens = mesh.frob_norm2(q - E) / (2.0 * m) - 0.5 * B
    return mesh.integrate(dens)


def duality_report(mesh, coeffs, chi, u, p, alpha=None):
    if alpha is None:
        alpha = direct_energy(mesh, coeffs, chi, u)
    beta = dual_objective(mesh, coeffs, chi, p)
    return DualityReport(alpha=float(alpha), beta=float(beta),
                         gap=float(alpha + beta),
                         ker_residual=ker_residual(mesh, coeffs, chi, p))


def orthogonality_residual(mesh, coeffs, chi, u, p):
    """Normalized primal-dual orthogonality |<p, eps(u)>|.

    Floored the same way as ker_residual for the degenerate p -> 0 case.
    """
    val = abs(mesh.pairing(p, u))
    eps_norm = mesh.l2_norm(mesh.symmetrized_gradient(u))
    p_scale = max(mesh.l2_norm(p),
                  mesh.l2_norm(energy.tilt_field(coeffs, chi)))
    denom = p_scale * eps_norm
    return val / denom if denom > 0 else 0.0


def alpha_representations(mesh, coeffs, chi, u, p, omega0, guard_scale=1e-8):
    """Algebraic re-expressions of the optimal value from one solve.

    Returns the direct quadrature value, the two global representations
    obtained from primal-dual orthogonality, the quadratic energy identity
    residual, and the two Omega_0-split representations (with guarded
    division by b - a off Omega_0).
    """
    eps = mesh.symmetrized_gradient(u)
    m = energy.m_field(coeffs, chi)
    E = energy.tilt_field(coeffs, chi)
    B = energy.B_field(coeffs, chi.psi)
    w = mesh.measures

    alpha_direct = direct_energy(mesh, coeffs, chi, u)
    eps2 = mesh.frob_norm2(eps)
    alpha_a = 0.5 * float((w * (-m * eps2 + B)).sum())
    alpha_b = 0.5 * float((w * (mesh.frob_dot(E, eps) + B)).sum())

    lhs = float((w * (m * eps2 + mesh.frob_norm2(p) / m)).sum())
    rhs = float((w * (mesh.frob_norm2(E) / m)).sum())
    ident_res = abs(lhs - rhs) / (1.0 + max(abs(lhs), abs(rhs)))

    a, b = coeffs.a, coeffs.b
    delta_guard = guard_scale * (a.max() + b.max())
    off0 = ~omega0
    guarded = off0 & (np.abs(a - b) >= delta_guard)
    guard_measure = float(w[off0 & ~guarded].sum())

    pdot = mesh.frob_dot(p, eps)
    # split integrands; the off-Omega_0 bracket eliminates psi eps via p
    ab_ = a * b
    dba = np.where(guarded, b - a, 1.0)
    CD = coeffs.C - coeffs.D
    termI = (mesh.frob_dot((ab_ / dba)[:, None] * CD, eps)
             + mesh.frob_dot(
                 (b[:, None] * coeffs.D - a[:, None] * coeffs.C) / dba[:, None],
                 p)
             + ab_ * (mesh.frob_norm2(coeffs.C)
                      - mesh.frob_norm2(coeffs.D)) / (2.0 * dba)
             - chi.psi * ab_ * mesh.frob_norm2(CD) / (2.0 * dba))
    off_part = 0.5 * float((w * termI * guarded).sum())

    B0 = (a * (mesh.frob_norm2(coeffs.C) + mesh.frob_norm2(coeffs.D)) / 2.0
          + chi.psi * a * (mesh.frob_norm2(coeffs.D)
                           - mesh.frob_norm2(coeffs.C)) / 2.0)
    alpha_16 = (off_part
                + 0.5 * float((w * (-a * eps2 + B0) * omega0).sum())
                + 0.5 * float((w * pdot * omega0).sum()))
    alpha_17 = (off_part
                + 0.5 * float((w * (mesh.frob_norm2(p) / a) * omega0).sum())
                - 0.5 * float((w * pdot * omega0).sum()))

    return {
        "alpha_direct": alpha_direct,
        "alpha_rep_bulk": alpha_a,
        "alpha_rep_tilt": alpha_b,
        "energy_identity_residual": float(ident_res),
        "alpha_split_primal": float(alpha_16),
        "alpha_split_dual": float(alpha_17),
        "guard_zone_measure": guard_measure,
    }
