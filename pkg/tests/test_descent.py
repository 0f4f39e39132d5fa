"""Alternating descent, laminate seeding, multistart, continuation."""

import numpy as np
import pytest

from doublewell import descent, energy, mesh as meshmod, oracles
from doublewell.errors import ConfigurationError

from conftest import make_coeffs, make_mesh_1d, make_mesh_2d


def test_phase_assignment_ties_go_to_a():
    mesh = make_mesh_1d(8)
    coeffs = make_coeffs(mesh, C=1.0, D=1.0)    # identical wells
    chi = descent.assign_phases(coeffs, np.zeros((mesh.n_elem, 1)))
    assert np.all(chi.chi_a == 1.0)


def test_convex_case_fixed_point_in_one_step():
    mesh = make_mesh_1d(32)
    coeffs = make_coeffs(mesh, C=1.0, D=1.0)
    trace = descent.alternate(mesh, coeffs,
                              {"u": mesh.zero_displacement()})
    assert trace.fixed_point
    assert len(trace.steps) == 1
    assert np.isclose(trace.alpha, 0.5)


def test_descent_monotone_from_random_seed():
    mesh = make_mesh_1d(64)
    coeffs = make_coeffs(mesh, C=1.0, D=-1.0)
    rng = np.random.default_rng(0)
    trace = descent.alternate(mesh, coeffs,
                              {"chi": descent.random_phase(mesh, rng)})
    alphas = trace.alphas
    assert all(alphas[k + 1] <= alphas[k] + 1e-10
               for k in range(len(alphas) - 1))
    assert trace.fixed_point


def test_laminate_seed_symmetric_exact_zero_every_resolution():
    for n in (16, 32, 64):
        mesh = make_mesh_1d(n)
        coeffs = make_coeffs(mesh, C=1.0, D=-1.0)
        u, chi, value = oracles.laminate_oracle(mesh, coeffs, 4)
        assert value == 0.0
        trace = descent.alternate(mesh, coeffs, {"u": u, "chi": chi})
        assert trace.alpha <= 1e-10


def test_laminate_seed_asymmetric_wells():
    # wells -1 and +3: volume fraction t = 3/4, zero-mean sawtooth
    mesh = make_mesh_1d(64)
    coeffs = make_coeffs(mesh, C=1.0, D=-3.0)
    u, chi, info = descent.laminate_seed(mesh, coeffs, 4)
    assert np.isclose(info["t"], 0.75)
    assert info["exact_mean_zero"]
    eps = mesh.symmetrized_gradient(u)
    assert abs((mesh.measures * eps[:, 0]).sum()) < 1e-12
    assert oracles.laminate_oracle(mesh, coeffs, 4)[2] == 0.0


def test_laminate_period_must_divide():
    mesh = make_mesh_1d(64)
    coeffs = make_coeffs(mesh)
    with pytest.raises(ConfigurationError):
        descent.laminate_seed(mesh, coeffs, 5)


def test_rank_one_decompose():
    M = np.array([[0.0, 0.5], [0.5, 0.0]])    # sym(e1 x e2)
    eta, nu = descent.rank_one_decompose(M)
    assert np.allclose(0.5 * (np.outer(eta, nu) + np.outer(nu, eta)), M)
    assert descent.rank_one_decompose(np.eye(2)) is None


def test_2d_laminate_compatible_pair_zero_energy():
    mesh = make_mesh_2d(16)
    coeffs = make_coeffs(mesh, C=[0.0, 0.5, 0.0], D=[0.0, -0.5, 0.0])
    u, chi, value = oracles.laminate_oracle(mesh, coeffs, 4)
    eps = mesh.symmetrized_gradient(u)
    # interior strains sit at the wells; only the clamped boundary
    # columns contribute
    interior = energy.h_density(coeffs, eps) < 1e-20
    assert interior.mean() > 0.8
    assert value <= 0.2    # O(h) boundary layer; decay tested elsewhere


def test_2d_incompatible_wells_reported():
    mesh = make_mesh_2d(8)
    coeffs = make_coeffs(mesh, C=[2.0, 0.0, 2.0], D=[1.0, 0.0, 1.0])
    u, chi, info = descent.laminate_seed(mesh, coeffs, 4)
    assert u is None
    assert not info["compatible"]


def test_multistart_laminate_beats_zero_seed():
    mesh = make_mesh_1d(64)
    coeffs = make_coeffs(mesh, C=1.0, D=-1.0)
    rng = np.random.default_rng(1)
    traces = descent.multistart(mesh, coeffs, ["zero", "laminate:4"], rng)
    assert traces[0].seed_label == "laminate:4"
    assert traces[0].alpha <= 1e-10
    assert traces[-1].alpha >= 0.49     # the stuck zero seed


def test_multistart_deterministic_for_fixed_seed():
    mesh = make_mesh_1d(32)
    coeffs = make_coeffs(mesh, C=1.0, D=-1.0)
    runs = []
    for _ in range(2):
        rng = np.random.default_rng(7)
        traces = descent.multistart(mesh, coeffs, ["random", "random"], rng)
        runs.append([t.alpha for t in traces])
    assert runs[0] == runs[1]


def test_refinement_continuation_prolongs_phases():
    coarse = make_mesh_1d(16)
    coeffs = make_coeffs(coarse, C=1.0, D=-1.0)
    rng = np.random.default_rng(3)
    trace = descent.alternate(coarse, coeffs,
                              {"chi": descent.random_phase(coarse, rng)})
    fine = meshmod.refine(coarse)
    init = descent.refine_continue(coarse, fine, trace)
    kids = init["chi"].chi_a.reshape(-1, 2)
    assert np.array_equal(kids[:, 0], kids[:, 1])
    assert np.array_equal(kids[:, 0], trace.chi.chi_a)
