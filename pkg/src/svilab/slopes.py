"""Descent-rate estimators: strong slopes, the regularity infimum, and fan cores.

Limits superior/inferior are approximated on geometric radius schedules
r_k = r0 * 2^-k; the reported value is the max of the per-radius suprema over
the three smallest radii (the schedule tail).  Sphere sampling is seeded
Gaussian-normalize; in dimension one both directions are enumerated exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import GeneratorSet, PolyhedralCone, core_measure, excess_set_set
from .problems import FEAS_TOL, SviProblem, image_set, merit, merit_many
from .regions import RegionSpec, as_vector, geometric_schedule, unit_directions

DEFAULT_RADII = geometric_schedule(0.5, 13)
TAIL = 3
DIRECTIONS_PER_DIM = 64


@dataclass(frozen=True, eq=False)
class SlopeEstimate:
    """Strong-slope estimate with its sampling provenance.

    ``value`` is the max of ``sups`` over the schedule tail; ``converged``
    flags a tail whose spread is within 5% of the value (or absolutely tiny).
    """

    value: float
    radii: tuple[float, ...]
    sups: tuple[float, ...]
    converged: bool


def strong_slope(phi: Callable[[np.ndarray], float], x0, radii=None,
                 n_directions: int | None = None, seed: int = 0,
                 tail: int = TAIL) -> SlopeEstimate:
    """Estimate limsup_{x -> x0} (phi(x0) - phi(x))+ / |x - x0|.

    For each schedule radius the positive descent quotient is maximized over
    sampled sphere points; a local minimizer comes out as 0.
    """
    x0 = as_vector(x0, name="x0")
    phi0 = float(phi(x0))
    if not math.isfinite(phi0):
        raise ValueError(f"phi is not finite at the base point: {phi0}")
    radii = tuple(radii) if radii is not None else DEFAULT_RADII
    if any(r <= 0 for r in radii) or any(a <= b for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be positive and strictly decreasing")
    dim = x0.size
    count = n_directions or DIRECTIONS_PER_DIM * dim
    rng = np.random.default_rng(seed)
    sups = []
    for r in radii:
        best = 0.0
        for u in unit_directions(dim, count, rng):
            value = float(phi(x0 + r * u))
            if not math.isfinite(value):
                raise ValueError(f"phi is not finite at distance {r} from the base point")
            best = max(best, (phi0 - value) / r)
        sups.append(max(best, 0.0))
    tail = min(tail, len(sups))
    tail_vals = sups[-tail:]
    value = max(tail_vals)
    spread = max(tail_vals) - min(tail_vals)
    converged = spread <= max(0.05 * value, 1e-9)
    return SlopeEstimate(value, radii, tuple(sups), converged)


def partial_strong_slope(prob: SviProblem, p0, x0, radii=None,
                         n_directions: int | None = None, seed: int = 0,
                         tail: int = TAIL) -> SlopeEstimate:
    """Strong slope of x -> merit(p0, x) at x0 (the parameter stays fixed)."""
    p0 = as_vector(p0, prob.map.n_p, "p0")
    return strong_slope(lambda x: merit(prob, p0, x), x0, radii=radii,
                        n_directions=n_directions, seed=seed, tail=tail)


@dataclass(frozen=True, eq=False)
class SigmaNablaEstimate:
    """Infimum of the partial slope over the off-graph part of a box.

    ``value`` is +inf (and the witness None) when the grid holds no
    infeasible point, realizing the empty infimum.
    """

    value: float
    witness_p: np.ndarray | None
    witness_x: np.ndarray | None
    witness_slope: SlopeEstimate | None
    n_infeasible: int
    n_grid: int
    h: float


def sigma_nabla(prob: SviProblem, pbar, xbar, delta2: float, h: float | None = None,
                radii=None, seed: int = 0, feas_tol: float = FEAS_TOL) -> SigmaNablaEstimate:
    """Minimize the partial strong slope over the infeasible grid points of
    B(pbar, delta2) x B(xbar, delta2).

    "Off the graph" means merit > feas_tol; exact graph membership is not
    decidable numerically.
    """
    pbar = as_vector(pbar, prob.map.n_p, "pbar")
    xbar = as_vector(xbar, prob.map.n_x, "xbar")
    if h is None:
        h = delta2 / 10.0
    p_grid = RegionSpec(pbar, delta2, h).grid()
    x_grid = RegionSpec(xbar, delta2, h).grid()
    best = math.inf
    witness_p = witness_x = witness_slope = None
    n_infeasible = 0
    for p in p_grid:
        values = merit_many(prob, p, x_grid)
        for x, val in zip(x_grid, values):
            if val <= feas_tol:
                continue
            n_infeasible += 1
            est = partial_strong_slope(prob, p, x, radii=radii, seed=seed)
            if est.value < best:
                best, witness_p, witness_x, witness_slope = est.value, p, x, est
    n_grid = p_grid.shape[0] * x_grid.shape[0]
    if n_infeasible == 0:
        return SigmaNablaEstimate(math.inf, None, None, None, 0, n_grid, h)
    return SigmaNablaEstimate(best, witness_p, witness_x, witness_slope,
                              n_infeasible, n_grid, h)


class FanPrederivative:
    """Positively homogeneous map u -> {M_1 u, ..., M_k u} from a matrix bundle."""

    def __init__(self, bundle, mode: str = "union"):
        mats = [np.atleast_2d(np.asarray(M, dtype=float)) for M in bundle]
        if not mats:
            raise ValueError("fan bundle must be nonempty")
        shape = mats[0].shape
        if any(M.shape != shape for M in mats):
            raise ValueError("all bundle matrices must share the same shape")
        if not all(np.all(np.isfinite(M)) for M in mats):
            raise ValueError("bundle matrices must be finite")
        if mode not in ("union", "hull"):
            raise ValueError(f"mode must be 'union' or 'hull', got {mode!r}")
        self.bundle = tuple(mats)
        self.mode = mode

    @property
    def domain_dim(self) -> int:
        return self.bundle[0].shape[1]

    @property
    def range_dim(self) -> int:
        return self.bundle[0].shape[0]

    def __repr__(self) -> str:
        return (f"FanPrederivative({len(self.bundle)} maps, "
                f"{self.range_dim}x{self.domain_dim}, mode={self.mode!r})")


def _hull_vertices(points: np.ndarray) -> np.ndarray:
    """Extreme points of the convex hull, working inside the affine hull when
    the points are rank-deficient."""
    pts = np.unique(points, axis=0)
    if pts.shape[0] <= 2:
        return pts
    center = pts.mean(axis=0)
    shifted = pts - center
    _, svals, vt = np.linalg.svd(shifted, full_matrices=False)
    rank = int(np.sum(svals > 1e-12 * max(1.0, svals[0])))
    if rank == 0:
        return pts[:1]
    coords = shifted @ vt[:rank].T
    if rank == 1:
        return pts[[int(np.argmin(coords[:, 0])), int(np.argmax(coords[:, 0]))]]
    from scipy.spatial import ConvexHull, QhullError

    try:
        return pts[np.sort(ConvexHull(coords).vertices)]
    except QhullError:
        return pts


def fan_apply(H: FanPrederivative, u) -> GeneratorSet:
    """Image H(u) = {M u : M in bundle} (hull mode keeps the extreme points)."""
    u = as_vector(u, H.domain_dim, "direction")
    pts = np.stack([M @ u for M in H.bundle])
    if H.mode == "hull":
        pts = _hull_vertices(pts)
    return GeneratorSet(pts)


@dataclass(frozen=True, eq=False)
class SigmaHEstimate:
    value: float
    direction: np.ndarray
    n_samples: int
    seed: int


def sigma_H(H: FanPrederivative, C: PolyhedralCone, n_samples: int | None = None,
            seed: int = 0) -> SigmaHEstimate:
    """sup over unit directions u of core(C, H(u)), by seeded sphere sampling.

    Requires int C nonempty (certified by a strictly interior witness);
    positive homogeneity of the core makes the sphere restriction well posed.
    """
    if H.range_dim != C.dim:
        raise ValueError(f"fan range dimension {H.range_dim} != cone dimension {C.dim}")
    if C.interior_witness() is None:
        raise ValueError("sigma_H needs a cone with nonempty interior")
    dim = H.domain_dim
    count = n_samples or DIRECTIONS_PER_DIM * dim
    rng = np.random.default_rng(seed)
    directions = unit_directions(dim, count, rng)
    best = -math.inf
    best_u = None
    for u in directions:
        value = core_measure(C, fan_apply(H, u)).value
        if value > best:
            best, best_u = value, u
    return SigmaHEstimate(max(best, 0.0), best_u, len(directions), seed)


def check_outer_prederivative(prob: SviProblem, p0, x0, H: FanPrederivative,
                              radii=None, n_directions: int | None = None,
                              seed: int = 0, tail: int = TAIL) -> float:
    """Sampled residual of the outer-prederivative inclusion for x -> F(p0, x).

    Returns the largest tail value of exc(F(p0, x0+v), F(p0, x0) + H(v)) / |v|
    over sampled v.  Zero (up to roundoff) is necessary for H to be an outer
    prederivative at x0; sampling cannot certify sufficiency.
    """
    p0 = as_vector(p0, prob.map.n_p, "p0")
    x0 = as_vector(x0, prob.map.n_x, "x0")
    radii = tuple(radii) if radii is not None else DEFAULT_RADII
    base = image_set(prob, p0, x0)
    rng = np.random.default_rng(seed)
    count = n_directions or DIRECTIONS_PER_DIM * prob.map.n_x
    worst = []
    for r in radii:
        level = 0.0
        for u in unit_directions(prob.map.n_x, count, rng):
            v = r * u
            fan_pts = fan_apply(H, v).points
            # Minkowski sum of the base image and H(v), generator by generator
            sums = (base.points[:, None, :] + fan_pts[None, :, :]).reshape(-1, prob.map.m)
            target = GeneratorSet(sums, base.recession)
            residual = excess_set_set(image_set(prob, p0, x0 + v), target)
            level = max(level, residual / r)
        worst.append(level)
    return max(worst[-min(tail, len(worst)):])


@dataclass(frozen=True, eq=False)
class SlopeSigmaHRow:
    p: np.ndarray
    x: np.ndarray
    merit: float
    slope: float
    sigma_h: float
    violation: bool


@dataclass(frozen=True, eq=False)
class SlopeSigmaHReport:
    rows: tuple[SlopeSigmaHRow, ...]
    violations: tuple[SlopeSigmaHRow, ...]
    tol_slope: float

    @property
    def passed(self) -> bool:
        return not self.violations


def check_slope_geq_sigmaH(prob: SviProblem, p_region: RegionSpec, x_region: RegionSpec,
                           fan_at: Callable[[np.ndarray, np.ndarray], FanPrederivative],
                           tol_slope: float = 0.05, radii=None, seed: int = 0,
                           feas_tol: float = FEAS_TOL,
                           fan_samples: int | None = None) -> SlopeSigmaHReport:
    """At every infeasible grid point, compare the partial slope against the
    core-based lower bound sigma_H of the supplied partial fan.

    Whether ``fan_at`` really produces outer prederivatives is the caller's
    responsibility; violations are reported as data, never raised.
    """
    rows = []
    violations = []
    x_grid = x_region.grid()
    for p in p_region.grid():
        values = merit_many(prob, p, x_grid)
        for x, val in zip(x_grid, values):
            if val <= feas_tol:
                continue
            est = partial_strong_slope(prob, p, x, radii=radii, seed=seed)
            sh = sigma_H(fan_at(p, x), prob.cone, n_samples=fan_samples, seed=seed)
            bad = est.value < sh.value - tol_slope
            row = SlopeSigmaHRow(p, x, float(val), est.value, sh.value, bad)
            rows.append(row)
            if bad:
                violations.append(row)
    return SlopeSigmaHReport(tuple(rows), tuple(violations), tol_slope)
