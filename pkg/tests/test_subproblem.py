"""Convex subproblem: assembly, CG solve, duality, algebraic identities."""

import numpy as np

from doublewell import descent, energy, oracles, subproblem

from conftest import make_coeffs, make_mesh_1d, make_mesh_2d


def phase_all_a(mesh):
    return descent.PhaseField.from_a_indicator(np.ones(mesh.n_elem, bool))


def test_convex_solve_matches_analytic_value():
    # min over H^1_0 of  int 0.5 |u' + 1|^2  is attained at u = 0
    mesh = make_mesh_1d(32)
    coeffs = make_coeffs(mesh, C=1.0, D=1.0)
    chi = phase_all_a(mesh)
    problem = subproblem.assemble(mesh, coeffs, chi)
    u, rep = subproblem.solve(problem)
    assert np.allclose(u, 0.0)
    assert np.isclose(rep.alpha, 0.5)


def test_cg_matches_dense_oracle_1d():
    mesh = make_mesh_1d(4)
    C = np.where(np.arange(mesh.n_elem) // 2 % 2 == 0, 1.0, -1.0)[:, None]
    coeffs = energy.CoefficientSet(mesh, 1.0, 1.0, C, C)
    chi = phase_all_a(mesh)
    problem = subproblem.assemble(mesh, coeffs, chi)
    u, _ = subproblem.solve(problem)
    u_dense = oracles.dense_solve_oracle(problem)
    assert np.abs(u - u_dense).max() <= 1e-9


def test_cg_matches_dense_oracle_2d():
    mesh = make_mesh_2d(4)
    coeffs = make_coeffs(mesh, a=1.0, b=2.0,
                         C=[1.0, 0.2, -0.5], D=[1.0, 0.2, -0.5])
    rng = np.random.default_rng(3)
    chi = descent.PhaseField.from_a_indicator(rng.random(mesh.n_elem) < 0.5)
    problem = subproblem.assemble(mesh, coeffs, chi)
    u, _ = subproblem.solve(problem)
    u_dense = oracles.dense_solve_oracle(problem)
    assert np.abs(u - u_dense).max() <= 1e-9


def test_duality_gap_zero_at_optimum():
    mesh = make_mesh_1d(64)
    coeffs = make_coeffs(mesh, a=1.0, b=2.0, C=0.7, D=-0.3)
    rng = np.random.default_rng(4)
    chi = descent.PhaseField.from_a_indicator(rng.random(mesh.n_elem) < 0.5)
    problem = subproblem.assemble(mesh, coeffs, chi)
    u, rep = subproblem.solve(problem)
    p = subproblem.dual_variable(mesh, coeffs, chi, u)
    drep = subproblem.duality_report(mesh, coeffs, chi, u, p,
                                     alpha=rep.alpha)
    assert abs(drep.gap) <= 1e-8 * (1.0 + abs(rep.alpha))
    assert drep.ker_residual <= 1e-9


def test_dual_objective_of_suboptimal_field_is_below():
    # weak duality: -I(q) <= alpha for any admissible q; at constant q
    # (always in Ker L*) the inequality must hold strictly or not at all
    mesh = make_mesh_1d(32)
    coeffs = make_coeffs(mesh, a=1.0, b=2.0, C=0.7, D=-0.3)
    rng = np.random.default_rng(5)
    chi = descent.PhaseField.from_a_indicator(rng.random(mesh.n_elem) < 0.5)
    problem = subproblem.assemble(mesh, coeffs, chi)
    _, rep = subproblem.solve(problem)
    for qval in (-1.0, 0.0, 0.5, 2.0):
        q = np.full((mesh.n_elem, 1), qval)
        assert -subproblem.dual_objective(mesh, coeffs, chi, q) \
            <= rep.alpha + 1e-12


def test_orthogonality_of_primal_dual_pair():
    mesh = make_mesh_2d(4)
    coeffs = make_coeffs(mesh, a=1.0, b=3.0,
                         C=[0.5, 0.1, 0.0], D=[-0.5, 0.0, 0.3])
    rng = np.random.default_rng(6)
    chi = descent.PhaseField.from_a_indicator(rng.random(mesh.n_elem) < 0.5)
    problem = subproblem.assemble(mesh, coeffs, chi)
    u, _ = subproblem.solve(problem)
    p = subproblem.dual_variable(mesh, coeffs, chi, u)
    assert subproblem.orthogonality_residual(mesh, coeffs, chi, u, p) \
        <= 1e-8


def test_energy_identity_and_representations():
    mesh = make_mesh_1d(64)
    coeffs = make_coeffs(mesh, a=1.0, b=2.0, C=0.7, D=-0.3)
    rng = np.random.default_rng(7)
    chi = descent.PhaseField.from_a_indicator(rng.random(mesh.n_elem) < 0.5)
    problem = subproblem.assemble(mesh, coeffs, chi)
    u, rep = subproblem.solve(problem)
    p = subproblem.dual_variable(mesh, coeffs, chi, u)
    omega0 = energy.omega0_mask(coeffs)
    out = subproblem.alpha_representations(mesh, coeffs, chi, u, p, omega0)
    scale = 1.0 + abs(out["alpha_direct"])
    assert abs(out["alpha_rep_bulk"] - out["alpha_direct"]) <= 1e-8 * scale
    assert abs(out["alpha_rep_tilt"] - out["alpha_direct"]) <= 1e-8 * scale
    assert out["energy_identity_residual"] <= 1e-8 * scale
    assert abs(out["alpha_split_primal"] - out["alpha_direct"]) <= 1e-8 * scale
    assert abs(out["alpha_split_dual"] - out["alpha_direct"]) <= 1e-8 * scale


def test_split_representations_with_equal_moduli_region():
    # a = b on half the domain exercises the Omega_0 split forms
    mesh = make_mesh_1d(64)
    b = np.where(mesh.centers[:, 0] < 0.5, 1.0, 2.0)
    coeffs = energy.CoefficientSet(mesh, 1.0, b, [0.7], [-0.3])
    rng = np.random.default_rng(8)
    chi = descent.PhaseField.from_a_indicator(rng.random(mesh.n_elem) < 0.5)
    problem = subproblem.assemble(mesh, coeffs, chi)
    u, rep = subproblem.solve(problem)
    p = subproblem.dual_variable(mesh, coeffs, chi, u)
    omega0 = energy.omega0_mask(coeffs)
    assert 0 < omega0.sum() < mesh.n_elem
    out = subproblem.alpha_representations(mesh, coeffs, chi, u, p, omega0)
    scale = 1.0 + abs(out["alpha_direct"])
    assert abs(out["alpha_split_primal"] - out["alpha_direct"]) <= 1e-8 * scale
    assert abs(out["alpha_split_dual"] - out["alpha_direct"]) <= 1e-8 * scale
    assert out["guard_zone_measure"] == 0.0


def test_zero_load_short_circuit():
    mesh = make_mesh_1d(16)
    coeffs = make_coeffs(mesh, C=0.0, D=0.0)
    chi = phase_all_a(mesh)
    problem = subproblem.assemble(mesh, coeffs, chi)
    u, rep = subproblem.solve(problem)
    assert np.array_equal(u, np.zeros_like(u))
    assert rep.alpha == 0.0
