"""Theta estimation, relaxation formulas, inequality chain, lower bound."""

import numpy as np

from doublewell import descent, limits as limitsmod, mesh as meshmod, \
    relaxation

from conftest import make_coeffs, make_mesh_1d


def analysis(C=1.0, D=-1.0, seed_kind="laminate", n=64, period=4):
    mesh = make_mesh_1d(n)
    coeffs = make_coeffs(mesh, C=C, D=D)
    if seed_kind == "laminate":
        u, chi, _ = descent.laminate_seed(mesh, coeffs, period)
        init = {"u": u, "chi": chi}
    else:
        init = {"u": mesh.zero_displacement()}
    trace = descent.alternate(mesh, coeffs, init)
    eps = mesh.symmetrized_gradient(trace.u)
    windows = meshmod.build_windows(mesh, 8)
    bundle = limitsmod.estimate_limits(mesh, windows, trace.u, eps,
                                       trace.p, trace.chi)
    masks = limitsmod.partition_masks(mesh, coeffs, bundle)
    d = limitsmod.gap_d(mesh, coeffs, bundle, masks)
    return mesh, coeffs, trace, bundle, masks, d


def test_theta_symmetric_laminate():
    mesh, coeffs, trace, bundle, masks, d = analysis()
    den = relaxation.gap_denominator(mesh, coeffs, bundle, masks)
    assert np.isclose(den, 1.0)
    est = relaxation.theta_estimate(d, den, 1e-12)
    assert np.isclose(est.theta_coeff1, 1.0, atol=1e-10)
    assert np.isclose(est.theta_half, 2.0, atol=1e-10)
    assert est.coeff1_in_range and not est.half_in_range
    assert est.verdict() == "coefficient-1"


def test_theta_zero_branch_for_convex_case():
    mesh, coeffs, trace, bundle, masks, d = analysis(C=1.0, D=1.0,
                                                     seed_kind="zero")
    den = relaxation.gap_denominator(mesh, coeffs, bundle, masks)
    est = relaxation.theta_estimate(d, den, 1e-12)
    assert est.zero_branch
    assert est.theta_coeff1 == 0.0


def test_formula_matches_scheme_on_laminates():
    for C, D in ((1.0, -1.0), (1.0, -3.0)):
        mesh, coeffs, trace, bundle, masks, d = analysis(C=C, D=D)
        den = relaxation.gap_denominator(mesh, coeffs, bundle, masks)
        theta = d / den
        for conv, th in (("coefficient-1", theta), ("coefficient-half", 2 * theta)):
            val = relaxation.eval_limit_formula(mesh, coeffs, bundle, masks, th,
                                       conv)
            assert abs(val - trace.alpha) <= 1e-10
            reps = relaxation.eval_representations(mesh, coeffs, bundle,
                                                   masks, th, conv)
            for v in reps.values():
                assert abs(v - trace.alpha) <= 1e-10


def test_formula_matches_scheme_on_convex_case():
    mesh, coeffs, trace, bundle, masks, d = analysis(C=1.0, D=1.0,
                                                     seed_kind="zero")
    val = relaxation.eval_limit_formula(mesh, coeffs, bundle, masks, 0.0,
                               "coefficient-1")
    assert abs(val - 0.5) <= 1e-10
    reps = relaxation.eval_representations(mesh, coeffs, bundle, masks,
                                           0.0, "coefficient-1")
    for v in reps.values():
        assert abs(v - 0.5) <= 1e-10


def test_eval_I_two_region_quadrature():
    # piecewise a != b off Omega_0 with zero fields: I reduces to the
    # constant term, integrable directly
    mesh = make_mesh_1d(64)
    from doublewell import energy
    b = np.where(mesh.centers[:, 0] < 0.5, 1.0, 2.0)
    coeffs = energy.CoefficientSet(mesh, 1.0, b, [1.0], [1.0])
    chi = descent.PhaseField.from_a_indicator(np.ones(mesh.n_elem, bool))
    eps = np.zeros((mesh.n_elem, 1))
    windows = meshmod.build_windows(mesh, 8)
    bundle = limitsmod.estimate_limits(
        mesh, windows, mesh.zero_displacement(), eps,
        np.zeros((mesh.n_elem, 1)), chi)
    masks = limitsmod.partition_masks(mesh, coeffs, bundle)
    out = relaxation.eval_I(mesh, coeffs, bundle, masks)
    # psi = -1, C = D = 1:  density = ab(|C|^2-|D|^2)/(2(b-a))
    #                                + ab|C-D|^2/(2(b-a)) = 0 ... plus the
    # p and eps terms vanish; direct quadrature over [0.5, 1]:
    guard = ~masks.omega0_elem
    dens = np.zeros(mesh.n_elem)
    assert np.isclose(out["value"],
                      float((mesh.measures * dens * guard).sum()))
    assert out["excluded_measure"] == 0.0


def test_inequality_chain_half_variant_holds():
    mesh, coeffs, trace, bundle, masks, d = analysis()
    chain = relaxation.inequality_chain(mesh, coeffs, bundle, masks,
                                        trace.alpha)
    assert chain["half_violation"] <= 1e-10
    # the full-coefficient constants fail on this oracle
    assert chain["full_violation"] > 0.4


def test_lower_bound_symmetric_and_convex():
    mesh = make_mesh_1d(32)
    sym = make_coeffs(mesh, C=1.0, D=-1.0)
    out = relaxation.dual_lower_bound(mesh, sym)
    assert abs(out["bound"]) <= 1e-10          # exact infimum is 0
    conv = make_coeffs(mesh, C=1.0, D=1.0)
    out = relaxation.dual_lower_bound(mesh, conv)
    assert abs(out["bound"] - 0.5) <= 1e-8     # bound is tight here


def test_relaxation_section_assembles():
    mesh, coeffs, trace, bundle, masks, d = analysis()
    out = relaxation.relaxation_section(mesh, coeffs, bundle, masks, d,
                                        trace.alpha)
    assert out["convention_verdict"] == "coefficient-1"
    assert out["alpha_residual_coefficient_1"] <= 1e-10
    assert not out["stuck_suspected"]
    assert out["lower_bound_gap"] <= 1e-10
