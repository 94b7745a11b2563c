"""Empirical verification of error bounds, Lipschitz rates, and Aubin moduli.

Every distance to the solution set goes through the brute grid oracle, and
every asserted bound carries a +2h slack for the grid half-step, so a clean
instance passes exactly and discretization never manufactures violations.

The Aubin divergence probe shrinks the neighborhood radius geometrically
while refining the grid step quadratically in the radius.  For an Aubin
continuous mapping the empirical modulus is bounded by the true one at any
resolution, so the schedule stays flat; genuine failure shows up as monotone
growth of the modulus along the schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import hausdorff
from .problems import FEAS_TOL, SolvCache, SviProblem, image_set, merit_many
from .regions import RegionSpec, as_vector
from .slopes import sigma_nabla

DEFAULT_ZETA = 0.5
DEFAULT_ETA = 0.25
DEFAULT_DELTA = 0.25
DEFAULT_R = 0.25
TOL_MOD = 0.05


def _dists_to_set(X: np.ndarray, S: np.ndarray) -> np.ndarray:
    """Euclidean distances of the rows of X to the finite row set S."""
    if S.shape[0] == 0:
        return np.full(X.shape[0], math.inf)
    if X.shape[1] == 1:
        vals = np.sort(S[:, 0])
        pos = np.clip(np.searchsorted(vals, X[:, 0]), 1, len(vals) - 1)
        left = np.abs(X[:, 0] - vals[pos - 1])
        right = np.abs(vals[pos] - X[:, 0])
        return np.minimum(left, right)
    out = np.empty(X.shape[0])
    for i, row in enumerate(X):
        out[i] = float(np.min(np.linalg.norm(S - row[None, :], axis=1)))
    return out


@dataclass(frozen=True, eq=False)
class ErrorBoundViolation:
    p: np.ndarray
    x: np.ndarray
    merit: float
    dist: float
    bound: float
    kind: str  # "bound" | "empty-slice"


@dataclass(frozen=True, eq=False)
class ErrorBoundReport:
    violations: tuple[ErrorBoundViolation, ...]
    worst_ratio: float | None
    n_points: int
    n_infeasible: int
    sigma: float
    h: float
    rows: tuple[tuple, ...] = ()  # (p, x, merit, dist, bound, ratio, verdict)

    @property
    def passed(self) -> bool:
        return not self.violations


def verify_error_bound(prob: SviProblem, pbar, xbar, sigma: float,
                       zeta: float = DEFAULT_ZETA, eta: float = DEFAULT_ETA,
                       h: float = 0.05, feas_tol: float = FEAS_TOL,
                       solv_radius: float | None = None,
                       cache: SolvCache | None = None) -> ErrorBoundReport:
    """Test dist(x, Solv(p)) <= merit(p, x) / sigma + 2h over a grid of
    B(pbar, zeta) x B(xbar, eta).

    An empty brute slice inside the parameter ball contradicts local
    solvability and is reported as its own violation class.  The worst ratio
    dist * sigma / merit over infeasible points is returned for sharpness
    diagnostics.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    pbar = as_vector(pbar, prob.map.n_p, "pbar")
    xbar = as_vector(xbar, prob.map.n_x, "xbar")
    cache = cache or SolvCache()
    if solv_radius is None:
        solv_radius = eta + 2.0 * zeta + 0.5
    x_region = RegionSpec(xbar, eta, h)
    solv_region = RegionSpec(xbar, solv_radius, h)
    x_grid = x_region.grid()
    violations = []
    rows = []
    worst = None
    n_points = 0
    n_infeasible = 0
    for p in RegionSpec(pbar, zeta, h).grid():
        merits = merit_many(prob, p, x_grid)
        slice_pts = cache.slice(prob, p, solv_region, feas_tol)
        if slice_pts.shape[0] == 0:
            violations.append(ErrorBoundViolation(p, xbar, float(np.min(merits)),
                                                  math.inf, math.inf, "empty-slice"))
            rows.append((p, xbar, float(np.min(merits)), math.inf, math.inf,
                         math.nan, "empty-slice"))
            n_points += x_grid.shape[0]
            continue
        dists = _dists_to_set(x_grid, slice_pts)
        for x, nu, d in zip(x_grid, merits, dists):
            n_points += 1
            bound = nu / sigma + 2.0 * h
            verdict = "ok"
            if d > bound:
                violations.append(ErrorBoundViolation(p, x, float(nu), float(d),
                                                      float(bound), "bound"))
                verdict = "violation"
            ratio = math.nan
            if nu > feas_tol:
                n_infeasible += 1
                ratio = d * sigma / nu
                worst = ratio if worst is None else max(worst, ratio)
            rows.append((p, x, float(nu), float(d), float(bound), ratio, verdict))
    return ErrorBoundReport(tuple(violations), worst, n_points, n_infeasible,
                            float(sigma), h, tuple(rows))


def estimate_partial_lipschitz_rate(prob: SviProblem, pbar, xbar, s: float = DEFAULT_R,
                                    tau: float = DEFAULT_DELTA,
                                    h: float | None = None) -> float:
    """Empirical rate of p -> F(p, x): max over grid pairs of
    hausdorff(F(p1, x), F(p2, x)) / |p1 - p2| for x in B(xbar, s)."""
    pbar = as_vector(pbar, prob.map.n_p, "pbar")
    xbar = as_vector(xbar, prob.map.n_x, "xbar")
    if h is None:
        h = tau / 5.0
    p_grid = RegionSpec(pbar, tau, h).grid()
    x_grid = RegionSpec(xbar, s, max(h, s / 5.0)).grid()
    rate = 0.0
    for x in x_grid:
        images = [image_set(prob, p, x) for p in p_grid]
        for i in range(len(p_grid)):
            for j in range(i + 1, len(p_grid)):
                gap = float(np.linalg.norm(p_grid[i] - p_grid[j]))
                rate = max(rate, hausdorff(images[i], images[j]) / gap)
    return rate


@dataclass(frozen=True, eq=False)
class AubinEstimate:
    kappa: float
    witness_p1: np.ndarray | None
    witness_p2: np.ndarray | None
    witness_x: np.ndarray | None
    n_pairs: int
    empty_slices: int
    delta: float
    r: float
    h: float


def estimate_aubin_modulus(prob: SviProblem, pbar, xbar, delta: float = DEFAULT_DELTA,
                           r: float = DEFAULT_R, h: float | None = None,
                           feas_tol: float = FEAS_TOL,
                           solv_radius: float | None = None,
                           cache: SolvCache | None = None) -> AubinEstimate:
    """Empirical Aubin modulus at (pbar, xbar):

        max over p1 != p2 in B(pbar, delta), x in Solv(p2) cap B(xbar, r)
        of dist(x, Solv(p1)) / |p1 - p2|,

    with both solution slices brute-forced on a grid of step h anchored at
    xbar.  Pairs whose target slice is empty are skipped and counted.  A
    calmness estimate is the same maximum pinned to p1 = pbar; it needs no
    separate operation.
    """
    pbar = as_vector(pbar, prob.map.n_p, "pbar")
    xbar = as_vector(xbar, prob.map.n_x, "xbar")
    if h is None:
        h = delta / 5.0
    if solv_radius is None:
        solv_radius = r + 4.0 * delta
    cache = cache or SolvCache()
    solv_region = RegionSpec(xbar, solv_radius, h)
    p_grid = RegionSpec(pbar, delta, h).grid()
    slices = [cache.slice(prob, p, solv_region, feas_tol) for p in p_grid]
    candidates = []
    for pts in slices:
        if pts.shape[0]:
            inside = np.max(np.abs(pts - xbar[None, :]), axis=1) <= r + 1e-12
            candidates.append(pts[inside])
        else:
            candidates.append(pts)
    kappa = 0.0
    witness = (None, None, None)
    n_pairs = 0
    empty = 0
    for i, p1 in enumerate(p_grid):
        if slices[i].shape[0] == 0:
            empty += 1
            continue
        for j, p2 in enumerate(p_grid):
            if i == j or candidates[j].shape[0] == 0:
                continue
            n_pairs += 1
            gap = float(np.linalg.norm(p1 - p2))
            dists = _dists_to_set(candidates[j], slices[i])
            k = int(np.argmax(dists))
            ratio = float(dists[k]) / gap
            if ratio > kappa:
                kappa = ratio
                witness = (p1, p2, candidates[j][k])
    return AubinEstimate(kappa, witness[0], witness[1], witness[2],
                         n_pairs, empty, delta, r, h)


@dataclass(frozen=True, eq=False)
class AubinDivergence:
    deltas: tuple[float, ...]
    hs: tuple[float, ...]
    kappas: tuple[float, ...]
    growth: float
    diverging: bool


def aubin_divergence(prob: SviProblem, pbar, xbar, delta0: float = DEFAULT_DELTA,
                     r: float = DEFAULT_R, steps: int = 5, h0: float | None = None,
                     growth_factor: float = 10.0, feas_tol: float = FEAS_TOL,
                     cache: SolvCache | None = None) -> AubinDivergence:
    """Aubin-failure probe: modulus estimates along delta_k = delta0 * 2^-k
    with grid step h_k = h0 * 4^-k (resolution quadratic in the radius).

    Divergence is declared on monotone growth by a total factor of at least
    ``growth_factor`` across the schedule.
    """
    if h0 is None:
        h0 = delta0 / 4.0
    cache = cache or SolvCache()
    deltas, hs, kappas = [], [], []
    for k in range(steps):
        delta = delta0 * 2.0 ** (-k)
        h = h0 * 4.0 ** (-k)
        est = estimate_aubin_modulus(prob, pbar, xbar, delta=delta, r=r, h=h,
                                     feas_tol=feas_tol, cache=cache)
        deltas.append(delta)
        hs.append(h)
        kappas.append(est.kappa)
    first, last = kappas[0], kappas[-1]
    monotone = all(b >= a * (1.0 - 1e-9) for a, b in zip(kappas, kappas[1:]))
    if first > 0:
        growth = last / first
    else:
        growth = math.inf if last > 0 else 1.0
    diverging = monotone and growth >= growth_factor
    return AubinDivergence(tuple(deltas), tuple(hs), tuple(kappas), growth, diverging)


@dataclass(frozen=True, eq=False)
class LipschitzLscFailure:
    p: np.ndarray
    dist: float
    allowed: float
    kind: str  # "distance" | "empty-slice"


@dataclass(frozen=True, eq=False)
class LipschitzLscReport:
    failures: tuple[LipschitzLscFailure, ...]
    n_checked: int
    ell: float
    h: float
    rows: tuple[tuple, ...] = ()  # (p, dist, allowed, verdict)

    @property
    def passed(self) -> bool:
        return not self.failures


def check_lipschitz_lsc(prob: SviProblem, pbar, xbar, ell: float,
                        delta: float = DEFAULT_DELTA, h: float | None = None,
                        feas_tol: float = FEAS_TOL, box_radius: float | None = None,
                        cache: SolvCache | None = None) -> LipschitzLscReport:
    """Check that Solv(p) meets B(xbar, ell * |p - pbar| + 2h) for sampled p.

    Lipschitz lower semicontinuity with rate ell, up to the grid slack."""
    if not ell >= 0:
        raise ValueError("ell must be nonnegative")
    pbar = as_vector(pbar, prob.map.n_p, "pbar")
    xbar = as_vector(xbar, prob.map.n_x, "xbar")
    if h is None:
        h = delta / 10.0
    if box_radius is None:
        box_radius = ell * delta + 4.0 * h + 1.0
    cache = cache or SolvCache()
    solv_region = RegionSpec(xbar, box_radius, h)
    failures = []
    rows = []
    n_checked = 0
    for p in RegionSpec(pbar, delta, h).grid():
        n_checked += 1
        slice_pts = cache.slice(prob, p, solv_region, feas_tol)
        allowed = ell * float(np.linalg.norm(p - pbar)) + 2.0 * h
        if slice_pts.shape[0] == 0:
            failures.append(LipschitzLscFailure(p, math.inf, allowed, "empty-slice"))
            rows.append((p, math.inf, allowed, "empty-slice"))
            continue
        d = float(np.min(np.linalg.norm(slice_pts - xbar[None, :], axis=1)))
        if d > allowed:
            failures.append(LipschitzLscFailure(p, d, allowed, "distance"))
            rows.append((p, d, allowed, "fail"))
        else:
            rows.append((p, d, allowed, "ok"))
    return LipschitzLscReport(tuple(failures), n_checked, float(ell), h, tuple(rows))


@dataclass(frozen=True, eq=False)
class AubinBoundReport:
    kappa: float
    ell: float
    sigma: float
    bound: float
    slack: float
    passed: bool
    tol_mod: float


def aubin_bound_check(prob: SviProblem, pbar, xbar, ell: float | None = None,
                      sigma: float | None = None, delta: float = DEFAULT_DELTA,
                      r: float = DEFAULT_R, h: float | None = None,
                      tol_mod: float = TOL_MOD, feas_tol: float = FEAS_TOL,
                      cache: SolvCache | None = None) -> AubinBoundReport:
    """Tie the estimators together: assert kappa_hat <= ell / sigma + tol_mod.

    ell and sigma default to their own estimates (partial Lipschitz rate and
    the slope infimum over B(pbar, delta) x B(xbar, r))."""
    pbar = as_vector(pbar, prob.map.n_p, "pbar")
    xbar = as_vector(xbar, prob.map.n_x, "xbar")
    if ell is None:
        ell = estimate_partial_lipschitz_rate(prob, pbar, xbar, s=r, tau=delta, h=h)
    if sigma is None:
        sigma = sigma_nabla(prob, pbar, xbar, delta2=max(delta, r),
                            h=h, feas_tol=feas_tol).value
    est = estimate_aubin_modulus(prob, pbar, xbar, delta=delta, r=r, h=h,
                                 feas_tol=feas_tol, cache=cache)
    bound = ell / sigma if sigma > 0 else (0.0 if ell == 0 else math.inf)
    if math.isinf(sigma):
        bound = 0.0
    slack = bound + tol_mod - est.kappa
    return AubinBoundReport(est.kappa, float(ell), float(sigma), bound, slack,
                            est.kappa <= bound + tol_mod, tol_mod)
