import pytest

from svilab import (AffineScenario, PolyhedralCone, SviProblem, UncertainMap,
                    aubin_bound_check, aubin_divergence, check_lipschitz_lsc,
                    estimate_aubin_modulus, estimate_partial_lipschitz_rate,
                    sigma_nabla, verify_error_bound)


def constant_solv_problem():
    # f(p, x, w) = -x + w over w in {0, 1}: Solv(p) = (-inf, 0] for every p
    scenarios = [AffineScenario([[-1.0]], [[0.0]], [0.0]),
                 AffineScenario([[-1.0]], [[0.0]], [1.0])]
    return SviProblem(map=UncertainMap.affine(1, 1, 1, scenarios),
                      cone=PolyhedralCone.orthant(1))


# --- parametric error bound ---------------------------------------------------

def test_error_bound_affine_clean(affine):
    report = verify_error_bound(affine, [0.0], [0.0], sigma=1.0,
                                zeta=0.5, eta=0.5, h=0.05)
    assert report.passed
    assert report.worst_ratio == pytest.approx(1.0, abs=1e-9)


def test_error_bound_fails_for_quadratic_with_any_sigma(quad1):
    for sigma in (0.5, 1.0, 2.0):
        report = verify_error_bound(quad1, [0.0], [0.0], sigma=sigma,
                                    zeta=0.5, eta=0.25, h=0.05)
        assert not report.passed
        assert report.worst_ratio > 1.0


def test_error_bound_vacuous_on_feasible_grid(quad1):
    report = verify_error_bound(quad1, [-2.0], [0.0], sigma=1.0,
                                zeta=0.5, eta=0.25, h=0.1)
    assert report.passed
    assert report.n_infeasible == 0
    assert report.worst_ratio is None


def test_error_bound_reports_empty_slices_separately(quad1):
    report = verify_error_bound(quad1, [9.0], [0.0], sigma=1.0,
                                zeta=0.5, eta=0.25, h=0.1, solv_radius=0.5)
    assert not report.passed
    assert {v.kind for v in report.violations} == {"empty-slice"}


# --- partial Lipschitz rate -----------------------------------------------------

def test_rate_affine_translation(affine):
    # both scenarios share B = 1, so the image just translates
    assert estimate_partial_lipschitz_rate(affine, [0.0], [0.0]) == pytest.approx(
        1.0, abs=1e-9)


def test_rate_quadratic_scales_with_sqrt_m(quad1, quad4):
    # generator-reduction oracle: hausdorff = sqrt(m) |p1 - p2|
    assert estimate_partial_lipschitz_rate(quad1, [0.0], [0.0]) == pytest.approx(
        1.0, abs=0.02)
    assert estimate_partial_lipschitz_rate(quad4, [0.0], [0.0]) == pytest.approx(
        2.0, abs=0.04)


# --- Aubin modulus ---------------------------------------------------------------

def test_aubin_modulus_affine_is_one(affine):
    est = estimate_aubin_modulus(affine, [0.0], [0.0])
    assert est.kappa == pytest.approx(1.0, abs=1e-9)
    assert est.n_pairs > 0


def test_aubin_modulus_constant_solv_is_zero():
    est = estimate_aubin_modulus(constant_solv_problem(), [0.0], [0.0])
    assert est.kappa == 0.0


def test_aubin_modulus_monotone_under_shrinking_neighborhood(affine, quad1):
    for prob in (affine, quad1):
        wide = estimate_aubin_modulus(prob, [0.0], [0.0], delta=0.25, r=0.25, h=0.05)
        narrow = estimate_aubin_modulus(prob, [0.0], [0.0], delta=0.125, r=0.125, h=0.05)
        assert narrow.kappa <= wide.kappa + 1e-12


def test_aubin_divergence_detected_for_quadratic(quad1):
    div = aubin_divergence(quad1, [0.0], [0.0], steps=5)
    assert div.diverging
    assert div.growth >= 10.0
    assert all(b >= a for a, b in zip(div.kappas, div.kappas[1:]))


def test_aubin_divergence_absent_for_affine(affine):
    div = aubin_divergence(affine, [0.0], [0.0], steps=5)
    assert not div.diverging
    assert max(div.kappas) <= 1.0 + 1e-9


# --- Lipschitz lower semicontinuity ----------------------------------------------

def test_lsc_affine_with_unit_rate(affine):
    report = check_lipschitz_lsc(affine, [0.0], [0.0], ell=1.0)
    assert report.passed


def test_lsc_fails_for_quadratic_at_any_fixed_rate(quad1):
    for ell in (1.0, 5.0):
        report = check_lipschitz_lsc(quad1, [0.0], [0.0], ell=ell, h=1e-3)
        assert not report.passed
        assert any(f.kind == "distance" for f in report.failures)


def test_lsc_trivial_at_the_base_parameter(quad1):
    # a grid collapsed onto pbar only checks p = pbar
    report = check_lipschitz_lsc(quad1, [0.0], [0.0], ell=1.0, delta=1e-6, h=0.05)
    assert report.n_checked == 1
    assert report.passed


# --- the modulus bound -------------------------------------------------------------

def test_aubin_bound_affine_passes_with_small_slack(affine):
    report = aubin_bound_check(affine, [0.0], [0.0])
    assert report.passed
    assert report.kappa == pytest.approx(1.0, abs=0.01)
    assert report.bound == pytest.approx(1.0, abs=0.01)
    assert abs(report.slack - report.tol_mod) <= 0.01


def test_aubin_bound_fails_with_inflated_sigma(affine):
    report = aubin_bound_check(affine, [0.0], [0.0], sigma=10.0)
    assert not report.passed


def test_aubin_bound_constant_solv_passes():
    report = aubin_bound_check(constant_solv_problem(), [0.0], [0.0],
                               ell=1.0, sigma=1.0)
    assert report.passed
    assert report.kappa == 0.0


def test_estimates_satisfy_theorem_inequality(affine):
    # kappa_hat <= ell_hat / sigma_hat + tol on the shipped instance with
    # positive slope infimum
    ell = estimate_partial_lipschitz_rate(affine, [0.0], [0.0])
    sigma = sigma_nabla(affine, [0.0], [0.0], 0.25, h=0.05).value
    est = estimate_aubin_modulus(affine, [0.0], [0.0])
    assert sigma > 0
    assert est.kappa <= ell / sigma + 0.05


def test_aubin_implies_lsc_with_estimated_rate(affine):
    est = estimate_aubin_modulus(affine, [0.0], [0.0])
    report = check_lipschitz_lsc(affine, [0.0], [0.0], ell=est.kappa + 0.05)
    assert report.passed
