"""Young-measure estimation and its verification checks."""

import numpy as np

from doublewell import descent, limits as limitsmod, mesh as meshmod, \
    youngmeasure

from conftest import make_coeffs, make_mesh_1d


def laminate_analysis(period=4, C=1.0, D=-1.0, n=64, window=8):
    mesh = make_mesh_1d(n)
    coeffs = make_coeffs(mesh, C=C, D=D)
    u, chi, _ = descent.laminate_seed(mesh, coeffs, period)
    trace = descent.alternate(mesh, coeffs, {"u": u, "chi": chi})
    eps = mesh.symmetrized_gradient(trace.u)
    windows = meshmod.build_windows(mesh, window)
    bundle = limitsmod.estimate_limits(mesh, windows, trace.u, eps,
                                       trace.p, trace.chi)
    masks = limitsmod.partition_masks(mesh, coeffs, bundle)
    measures = youngmeasure.estimate_ym(mesh, windows, eps, trace.chi,
                                        coeffs)
    return mesh, coeffs, trace, windows, bundle, masks, measures


def test_atoms_and_weights_structure():
    mesh, coeffs, trace, windows, bundle, masks, measures = \
        laminate_analysis()
    for m in measures:
        assert np.isclose(m.weights.sum(), 1.0)
        assert np.all(m.weights >= 0.0)
        assert np.isclose(m.chia_weight + m.chib_weight, 1.0)
        assert np.allclose(m.first_moment,
                           bundle.eps_avg[m.window], atol=1e-12)


def test_two_point_law_moments():
    mesh, coeffs, trace, windows, bundle, masks, measures = \
        laminate_analysis()
    for m in measures:
        assert np.isclose(m.chia_weight, 0.5)
        assert np.isclose(m.second_moment_a, 1.0)   # atoms at +-1, a = 1
        assert np.isclose(m.h_moment, 0.0, atol=1e-20)


def test_energy_representation_residual():
    mesh, coeffs, trace, windows, bundle, masks, measures = \
        laminate_analysis()
    out = youngmeasure.ym_energy_check(measures, windows, trace.alpha)
    assert out["residual"] <= 1e-8


def test_second_moment_difference_is_gap_d():
    mesh, coeffs, trace, windows, bundle, masks, measures = \
        laminate_analysis()
    out = youngmeasure.second_moment_check(mesh, coeffs, bundle, masks)
    d = limitsmod.gap_d(mesh, coeffs, bundle, masks)
    assert np.isclose(out["difference"], d)


def test_dirac_on_pure_phase_windows():
    # period 16 with window 8: every window sits in a single phase band
    mesh, coeffs, trace, windows, bundle, masks, measures = \
        laminate_analysis(period=16)
    assert masks.w0.all()
    rep = youngmeasure.dirac_check(measures, masks)
    assert rep.all_passed


def test_dirac_negative_control_misclassified_windows():
    # eta = 0.6 wrongly pulls fully mixed windows into omega_0; their
    # strain variance is O(1) and the check must fail
    mesh, coeffs, trace, windows, bundle, masks, measures = \
        laminate_analysis(period=4)
    bad_masks = limitsmod.partition_masks(mesh, coeffs, bundle, eta=0.6)
    assert bad_masks.w0.any()
    rep = youngmeasure.dirac_check(measures, bad_masks)
    assert not rep.all_passed


def test_two_point_variance_identity():
    mesh, coeffs, trace, windows, bundle, masks, measures = \
        laminate_analysis(period=4)
    rows = youngmeasure.two_point_variance_check(mesh, coeffs, measures,
                                                 windows)
    assert rows                    # all windows have atoms at the wells
    for row in rows:
        scale = max(abs(row["predicted"]), 1e-12)
        assert abs(row["gap"] - row["predicted"]) <= 0.05 * scale
