"""Weak-limit estimation, partitions, gap scalar, pairing diagnostic."""

import numpy as np

from doublewell import descent, limits as limitsmod, mesh as meshmod

from conftest import make_coeffs, make_mesh_1d


def laminate_run(n=64, period=4, C=1.0, D=-1.0, window=8):
    mesh = make_mesh_1d(n)
    coeffs = make_coeffs(mesh, C=C, D=D)
    u, chi, _ = descent.laminate_seed(mesh, coeffs, period)
    trace = descent.alternate(mesh, coeffs, {"u": u, "chi": chi})
    eps = mesh.symmetrized_gradient(trace.u)
    windows = meshmod.build_windows(mesh, window)
    bundle = limitsmod.estimate_limits(mesh, windows, trace.u, eps,
                                       trace.p, trace.chi)
    return mesh, coeffs, trace, windows, bundle


def test_symmetric_laminate_averages_vanish():
    mesh, coeffs, trace, windows, bundle = laminate_run()
    assert np.allclose(bundle.psi_avg, 0.0, atol=1e-12)
    assert np.allclose(bundle.eps_avg, 0.0, atol=1e-12)
    assert np.allclose(bundle.p_avg, 0.0, atol=1e-10)
    assert np.allclose(bundle.chia_avg + bundle.chib_avg, 1.0)


def test_partition_masks_symmetric_laminate():
    mesh, coeffs, trace, windows, bundle = laminate_run()
    masks = limitsmod.partition_masks(mesh, coeffs, bundle, eta=0.05)
    assert masks.omega0_elem.all()            # a = b everywhere
    assert masks.omega0_window.all()
    assert not masks.w0.any()                 # every window fully mixed
    assert not masks.w0_plus.any()
    assert not masks.w0_minus.any()


def test_partition_masks_two_region():
    mesh = make_mesh_1d(64)
    from doublewell import energy
    b = np.where(mesh.centers[:, 0] < 0.5, 1.0, 2.0)
    coeffs = energy.CoefficientSet(mesh, 1.0, b, [1.0], [-1.0])
    chi = descent.PhaseField.from_a_indicator(np.ones(mesh.n_elem, bool))
    eps = np.zeros((mesh.n_elem, 1))
    windows = meshmod.build_windows(mesh, 8)
    bundle = limitsmod.estimate_limits(
        mesh, windows, mesh.zero_displacement(), eps, eps.copy(), chi)
    masks = limitsmod.partition_masks(mesh, coeffs, bundle)
    assert np.array_equal(masks.omega0_elem, mesh.centers[:, 0] < 0.5)
    assert masks.omega0_window.sum() == 4
    assert masks.w0.all()                     # pure phase a everywhere
    assert masks.w0_minus.all()
    assert not masks.w0_plus.any()


def test_gap_d_symmetric_laminate_equals_one():
    mesh, coeffs, trace, windows, bundle = laminate_run()
    masks = limitsmod.partition_masks(mesh, coeffs, bundle)
    d = limitsmod.gap_d(mesh, coeffs, bundle, masks)
    # strains at +-1, means 0:  d = int a |eps|^2 = 1
    assert np.isclose(d, 1.0, atol=1e-10)
    assert d >= -1e-12                        # Jensen


def test_gap_d_zero_without_oscillation():
    mesh = make_mesh_1d(64)
    coeffs = make_coeffs(mesh, C=1.0, D=1.0)
    trace = descent.alternate(mesh, coeffs,
                              {"u": mesh.zero_displacement()})
    eps = mesh.symmetrized_gradient(trace.u)
    windows = meshmod.build_windows(mesh, 8)
    bundle = limitsmod.estimate_limits(mesh, windows, trace.u, eps,
                                       trace.p, trace.chi)
    masks = limitsmod.partition_masks(mesh, coeffs, bundle)
    # convex problem: the solution strain is constant per window
    d = limitsmod.gap_d(mesh, coeffs, bundle, masks)
    assert abs(d) <= 1e-10


def test_pairing_diagnostic_levels_shrink():
    mesh, coeffs, trace, windows, bundle = laminate_run()
    coarse = make_mesh_1d(16)
    ccoeffs = make_coeffs(coarse, C=1.0, D=-1.0)
    u0, chi0, _ = descent.laminate_seed(coarse, ccoeffs, 4)
    t0 = descent.alternate(coarse, ccoeffs, {"u": u0, "chi": chi0})
    testset = meshmod.default_test_functions(mesh)
    out = limitsmod.pairing_diagnostic(
        [{"mesh": coarse, "u": t0.u, "p": t0.p},
         {"mesh": mesh, "u": trace.u, "p": trace.p}],
        bundle, testset)
    assert len(out["rows"]) == 2 * testset.n_test
    assert not any(out["non_decreasing_flags"])
