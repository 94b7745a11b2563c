import math

import numpy as np
import pytest

from svilab import (FanPrederivative, PolyhedralCone, RegionSpec,
                    check_outer_prederivative, check_slope_geq_sigmaH,
                    core_measure, fan_apply, partial_strong_slope, sigma_H,
                    sigma_nabla, strong_slope)
from oracles import oracle_grad_norm, oracle_sigma_h_single_matrix_orthant

R2 = PolyhedralCone.orthant(2)


# --- strong slope -------------------------------------------------------------

def test_slope_absolute_value():
    est = strong_slope(lambda x: abs(x[0]), [1.0])
    assert est.value == pytest.approx(1.0, abs=0.02)
    assert est.converged


def test_slope_local_minimizer():
    est = strong_slope(lambda x: x[0] ** 2, [0.0])
    assert est.value == 0.0


def test_slope_distance_to_halfline():
    # finite differences of dist(., R_+) at -2 give slope 1
    phi = lambda x: max(0.0, -x[0])
    fd = abs(phi(np.array([-2.0 + 1e-6])) - phi(np.array([-2.0 - 1e-6]))) / 2e-6
    est = strong_slope(phi, [-2.0])
    assert est.value == pytest.approx(1.0, abs=0.02)
    assert est.value == pytest.approx(fd, abs=0.02)


def test_slope_matches_gradient_norm_for_quadratics():
    rng = np.random.default_rng(37)
    for _ in range(10):
        Q = rng.normal(size=(2, 2))
        Q = Q @ Q.T + 0.5 * np.eye(2)
        b = rng.normal(size=2)
        phi = lambda x: 0.5 * float(x @ Q @ x) + float(b @ x)
        x0 = rng.uniform(-1, 1, size=2)
        grad = oracle_grad_norm(phi, x0)
        if grad < 0.2:
            continue
        est = strong_slope(phi, x0, seed=int(rng.integers(1000)))
        assert est.value == pytest.approx(grad, rel=0.02)


def test_slope_rejects_nonfinite_field():
    with pytest.raises(ValueError):
        strong_slope(lambda x: math.inf, [0.0])


def test_slope_schedule_validation():
    with pytest.raises(ValueError):
        strong_slope(lambda x: abs(x[0]), [1.0], radii=[0.1, 0.2])


# --- partial slope --------------------------------------------------------------

def test_partial_slope_quadratic_m1(quad1):
    est = partial_strong_slope(quad1, [1.0], [0.5])
    assert est.value == pytest.approx(1.0, abs=0.03)  # 2*sqrt(1)*0.5


def test_partial_slope_quadratic_m4(quad4):
    est = partial_strong_slope(quad4, [1.0], [0.25])
    assert est.value == pytest.approx(1.0, abs=0.03)  # 2*sqrt(4)*0.25


def test_partial_slope_zero_inside_solution_set(quad1):
    est = partial_strong_slope(quad1, [-1.0], [0.3])
    assert est.value == 0.0


def test_partial_slope_closed_form_sweep(quad2):
    cf = quad2.closed_forms.partial_slope
    for x in (0.2, -0.45, 0.8):
        p = x * x + 0.2
        est = partial_strong_slope(quad2, [p], [x])
        assert est.value == pytest.approx(cf(np.array([p]), np.array([x])), rel=0.03)


# --- sigma_nabla ------------------------------------------------------------------

def test_sigma_nabla_degenerates_at_origin(quad1):
    est = sigma_nabla(quad1, [0.0], [0.0], 0.5, h=0.05)
    assert est.value <= 0.05
    assert abs(est.witness_x[0]) <= 0.025
    assert est.n_infeasible > 0


def test_sigma_nabla_affine_is_one(affine):
    est = sigma_nabla(affine, [0.0], [0.0], 0.5, h=0.05)
    assert est.value == pytest.approx(1.0, abs=0.05)


def test_sigma_nabla_infinite_on_feasible_grid(quad1):
    est = sigma_nabla(quad1, [-2.0], [0.0], 0.5, h=0.1)
    assert math.isinf(est.value)
    assert est.witness_p is None
    assert est.n_infeasible == 0


def test_sigma_nabla_finer_grid_never_larger(affine, quad1):
    for prob in (affine, quad1):
        coarse = sigma_nabla(prob, [0.0], [0.0], 0.5, h=0.1)
        fine = sigma_nabla(prob, [0.0], [0.0], 0.5, h=0.05)
        assert fine.value <= coarse.value + 1e-12


# --- fans and sigma_H ---------------------------------------------------------------

def test_fan_apply_identity():
    H = FanPrederivative([np.eye(2)])
    assert np.allclose(fan_apply(H, [1, 2]).points, [[1, 2]])


def test_fan_apply_two_matrices():
    H = FanPrederivative([np.eye(2), 2 * np.eye(2)])
    assert np.allclose(fan_apply(H, [1, 0]).points, [[1, 0], [2, 0]])


def test_fan_apply_zero_direction():
    H = FanPrederivative([np.eye(2)])
    assert np.allclose(fan_apply(H, [0, 0]).points, [[0, 0]])


def test_fan_hull_mode_keeps_extremes():
    H = FanPrederivative([np.eye(2), 2 * np.eye(2), 1.5 * np.eye(2)], mode="hull")
    pts = fan_apply(H, [1.0, 0.0]).points
    assert pts.shape[0] == 2
    assert {tuple(p) for p in pts} == {(1.0, 0.0), (2.0, 0.0)}


def test_sigma_h_identity_bundle_hits_diagonal():
    est = sigma_H(FanPrederivative([np.eye(2)]), R2, n_samples=4096)
    oracle = oracle_sigma_h_single_matrix_orthant(np.eye(2))
    assert oracle == pytest.approx(1 / math.sqrt(2), abs=1e-6)
    assert est.value == pytest.approx(oracle, rel=0.01)
    assert np.allclose(np.abs(est.direction), [1 / math.sqrt(2)] * 2, atol=0.05)


def test_sigma_h_scaled_bundle_same_value():
    est = sigma_H(FanPrederivative([np.eye(2), 2 * np.eye(2)]), R2, n_samples=4096)
    assert est.value == pytest.approx(1 / math.sqrt(2), rel=0.01)


def test_sigma_h_zero_for_sign_split_map():
    # H(u) = {(u, -u)} never sits inside the orthant, so every core is zero
    H = FanPrederivative([np.array([[1.0], [-1.0]])])
    est = sigma_H(H, R2, n_samples=64)
    assert est.value == 0.0


def test_sigma_h_zero_bundle():
    est = sigma_H(FanPrederivative([np.zeros((2, 2))]), R2, n_samples=64)
    assert est.value == 0.0


def test_sigma_h_requires_interior():
    slab = PolyhedralCone(2, [[1.0, 0.0], [-1.0, 0.0]])
    with pytest.raises(ValueError):
        sigma_H(FanPrederivative([np.eye(2)]), slab)


def test_core_homogeneity_under_fan_scaling():
    rng = np.random.default_rng(41)
    H = FanPrederivative([np.eye(2), np.array([[2.0, 0.0], [0.5, 1.0]])])
    for _ in range(25):
        u = rng.normal(size=2)
        u /= np.linalg.norm(u)
        t = float(rng.uniform(0.1, 5.0))
        assert core_measure(R2, fan_apply(H, t * u)).value == pytest.approx(
            t * core_measure(R2, fan_apply(H, u)).value, rel=1e-12, abs=1e-12)


# --- prederivative residual ------------------------------------------------------

def test_exact_affine_fan_has_zero_residual(affine):
    H = FanPrederivative([np.array([[-1.0]])])  # the map's linear part in x
    rng = np.random.default_rng(47)
    for _ in range(10):
        p = rng.uniform(-1, 1, size=1)
        x = rng.uniform(-2, 2, size=1)
        assert check_outer_prederivative(affine, p, x, H) <= 1e-12


def test_wrong_fan_has_positive_residual(affine):
    H = FanPrederivative([np.array([[0.0]])])
    residual = check_outer_prederivative(affine, [0.3], [1.5], H)
    assert residual > 0.5


# --- slope versus sigma_H ----------------------------------------------------------

def test_slope_dominates_sigma_h_affine(affine):
    H = FanPrederivative([np.array([[-1.0]])])
    report = check_slope_geq_sigmaH(
        affine, RegionSpec([0.0], 0.4, 0.2), RegionSpec([0.0], 0.4, 0.2),
        fan_at=lambda p, x: H)
    assert report.rows
    assert report.passed
    for row in report.rows:
        assert row.sigma_h == pytest.approx(1.0, abs=1e-12)
        assert row.slope == pytest.approx(1.0, abs=0.03)


def test_zero_bundle_is_vacuous(affine):
    H = FanPrederivative([np.array([[0.0]])])
    report = check_slope_geq_sigmaH(
        affine, RegionSpec([0.0], 0.4, 0.2), RegionSpec([0.0], 0.4, 0.2),
        fan_at=lambda p, x: H)
    assert report.passed
    assert all(row.sigma_h == 0.0 for row in report.rows)


def test_slope_dominates_sigma_h_quadratic(quad2):
    # exact partial fan of x -> F(p, x): u -> {2 x u (1,..,1)}
    def fan_at(p, x):
        return FanPrederivative([2.0 * x[0] * np.ones((2, 1))])

    report = check_slope_geq_sigmaH(
        quad2, RegionSpec([0.6], 0.3, 0.15), RegionSpec([0.35], 0.3, 0.15),
        fan_at=fan_at)
    assert report.rows
    assert report.passed
    for row in report.rows:
        assert row.sigma_h == pytest.approx(2.0 * abs(row.x[0]), abs=1e-12)
        assert row.slope == pytest.approx(2.0 * math.sqrt(2) * abs(row.x[0]), rel=0.05)
