"""Graphical-derivative sampling for the solution mapping, with prederivative
inner/outer approximations.

Membership of a direction (q, v) in the contingent cone to the solution graph
at a feasible base point is read off the decay of

    dist(base + t (q, v), graph Solv) / t

along a geometric t-schedule: the direction is declared a member when the
minimum over the schedule tail falls below a threshold.  The product space
P x X carries the max-norm (Euclidean within each factor).

The graph-distance oracle brute-forces solution slices.  Inside the
membership test the slices live on windows centered at the query point whose
radius and grid step both scale with t, so the ratio error stays O(h_factor)
uniformly along the schedule instead of blowing up like h/t.  The fixed-box
variant ``graph_distance`` is exposed for direct use.

Inner and outer approximations through a joint fan are exact for polyhedral
cones: no sampling enters them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import GeneratorSet, PolyhedralCone, tangent_cone
from .problems import FEAS_TOL, SolvCache, SviProblem, image_set, merit
from .regions import RegionSpec, as_vector, circle_directions, geometric_schedule, unit_directions
from .slopes import FanPrederivative, fan_apply

DEFAULT_T_SCHEDULE = geometric_schedule(0.5, 15)
MEMBER_THRESHOLD = 0.05
WINDOW_FACTOR = 0.25
H_FACTOR = 0.005
COARSE_FACTOR = 4.0
TAIL = 3


@dataclass(frozen=True, eq=False)
class GraphBox:
    """Search region for the graph-distance oracle: a parameter-slice grid and
    the solution box brute-forced on every slice."""

    p_region: RegionSpec
    x_region: RegionSpec


def graph_distance(prob: SviProblem, p, x, box: GraphBox,
                   feas_tol: float = FEAS_TOL, cache: SolvCache | None = None) -> float:
    """Distance from (p, x) to the solution graph under the product max-norm.

    Minimizes max(|q - p|, dist(x, Solv(q))) over the sampled slices q; +inf
    when every slice in the box has an empty brute solution set.
    """
    p = as_vector(p, prob.map.n_p, "p")
    x = as_vector(x, prob.map.n_x, "x")
    cache = cache or SolvCache()
    best = math.inf
    for q in box.p_region.grid():
        gap = float(np.linalg.norm(q - p))
        if gap >= best:
            continue
        slice_pts = cache.slice(prob, q, box.x_region, feas_tol)
        if slice_pts.shape[0] == 0:
            continue
        dx = float(np.min(np.linalg.norm(slice_pts - x[None, :], axis=1)))
        best = min(best, max(gap, dx))
    return best


@dataclass(frozen=True, eq=False)
class ConeMembershipVerdict:
    """Outcome of the contingent-cone membership test.

    ``member`` holds exactly when ``min_ratio``, the minimum of the ratio
    trace over the schedule tail, is at most the threshold.
    """

    member: bool
    ts: tuple[float, ...]
    ratios: tuple[float, ...]
    threshold: float
    min_ratio: float


def contingent_member_graph(prob: SviProblem, pbar, xbar, p_dir, v_dir,
                            schedule=None, threshold: float = MEMBER_THRESHOLD,
                            window: float = WINDOW_FACTOR, h_factor: float = H_FACTOR,
                            coarse_factor: float = COARSE_FACTOR, tail: int = TAIL,
                            feas_tol: float = FEAS_TOL,
                            cache: SolvCache | None = None) -> ConeMembershipVerdict:
    """Decide whether (p_dir, v_dir) enters the contingent cone to the solution
    graph at the feasible base point (pbar, xbar).

    Each schedule point t queries the graph distance on a window of radius
    window*t around base + t*(p_dir, v_dir) with grid step h_factor*t
    (coarsened by coarse_factor off the tail, where ratios are informational
    only).  A window exhausted without finding the graph reports ratio +inf,
    which is conclusive as long as window > threshold.
    """
    pbar = as_vector(pbar, prob.map.n_p, "pbar")
    xbar = as_vector(xbar, prob.map.n_x, "xbar")
    p_dir = as_vector(p_dir, prob.map.n_p, "p_dir")
    v_dir = as_vector(v_dir, prob.map.n_x, "v_dir")
    if merit(prob, pbar, xbar) > feas_tol:
        raise ValueError("contingent membership needs a feasible base point")
    if window <= threshold:
        raise ValueError("window factor must exceed the membership threshold")
    schedule = tuple(schedule) if schedule is not None else DEFAULT_T_SCHEDULE
    cache = cache or SolvCache()
    ratios = []
    n_fine = min(tail, len(schedule))
    for idx, t in enumerate(schedule):
        fine = idx >= len(schedule) - n_fine
        h = (h_factor if fine else h_factor * coarse_factor) * t
        p_query = pbar + t * p_dir
        x_query = xbar + t * v_dir
        box = GraphBox(RegionSpec(p_query, window * t, h),
                       RegionSpec(x_query, window * t, h))
        d = graph_distance(prob, p_query, x_query, box, feas_tol, cache)
        ratios.append(d / t)
    min_ratio = min(ratios[-n_fine:])
    return ConeMembershipVerdict(min_ratio <= threshold, schedule, tuple(ratios),
                                 threshold, min_ratio)


def direction_grid(n_p: int, n_x: int, count: int, seed: int = 0) -> np.ndarray:
    """Unit directions in P x X: evenly spaced on the plane, sampled otherwise."""
    dim = n_p + n_x
    if dim == 2:
        return circle_directions(count)
    return unit_directions(dim, count, np.random.default_rng(seed))


@dataclass(frozen=True, eq=False)
class GderRow:
    p_dir: np.ndarray
    v_dir: np.ndarray
    member: bool
    min_ratio: float


def gder_sample(prob: SviProblem, pbar, xbar, directions=None, count: int = 72,
                seed: int = 0, **membership_opts) -> list[GderRow]:
    """Sampled graphical derivative of Solv at a graph point: contingent-cone
    membership over a grid of unit directions (q, v)."""
    n_p, n_x = prob.map.n_p, prob.map.n_x
    if directions is None:
        directions = direction_grid(n_p, n_x, count, seed)
    cache = membership_opts.pop("cache", None) or SolvCache()
    rows = []
    for d in np.atleast_2d(np.asarray(directions, dtype=float)):
        verdict = contingent_member_graph(prob, pbar, xbar, d[:n_p], d[n_p:],
                                          cache=cache, **membership_opts)
        rows.append(GderRow(d[:n_p], d[n_p:], verdict.member, verdict.min_ratio))
    return rows


def inner_approx_member(H_joint: FanPrederivative, C: PolyhedralCone, p_dir, v_dir,
                        tol: float = 1e-9) -> bool:
    """Exact inner test: every generator of H(q, v) lies in C."""
    u = np.concatenate([as_vector(p_dir, name="p_dir"), as_vector(v_dir, name="v_dir")])
    if u.size != H_joint.domain_dim:
        raise ValueError(f"direction dimension {u.size} != fan domain {H_joint.domain_dim}")
    pts = fan_apply(H_joint, u).points
    return bool(C.contains_many(pts, tol).all())


def outer_approx_member(H_joint: FanPrederivative, C: PolyhedralCone,
                        F_base: GeneratorSet, p_dir, v_dir, tol: float = 1e-9) -> bool:
    """Exact outer test: H(q, v) lies in the tangent cone T(C; y) for every
    generator y of the base image.

    Recession directions of the base image only deactivate constraints, so
    checking the generators is exhaustive.  The base image must sit inside C.
    """
    u = np.concatenate([as_vector(p_dir, name="p_dir"), as_vector(v_dir, name="v_dir")])
    if u.size != H_joint.domain_dim:
        raise ValueError(f"direction dimension {u.size} != fan domain {H_joint.domain_dim}")
    if not C.contains_many(F_base.points, tol).all():
        raise ValueError("outer approximation needs a feasible base point "
                         "(every base generator inside the cone)")
    pts = fan_apply(H_joint, u).points
    for y in F_base.points:
        T = tangent_cone(C, y)
        if not T.contains_many(pts, tol).all():
            return False
    return True


@dataclass(frozen=True, eq=False)
class SandwichRow:
    p_dir: np.ndarray
    v_dir: np.ndarray
    inner: bool
    sampled: bool
    outer: bool
    min_ratio: float


@dataclass(frozen=True, eq=False)
class SandwichViolation:
    row: SandwichRow
    kind: str  # "inner-not-sampled" | "sampled-not-outer"


@dataclass(frozen=True, eq=False)
class SandwichReport:
    rows: tuple[SandwichRow, ...]
    violations: tuple[SandwichViolation, ...]

    @property
    def agreement(self) -> float:
        """Fraction of directions where inner, sampled, and outer coincide."""
        if not self.rows:
            return 1.0
        agree = sum(1 for r in self.rows if r.inner == r.sampled == r.outer)
        return agree / len(self.rows)


def sandwich_check(prob: SviProblem, pbar, xbar, H_joint: FanPrederivative,
                   directions=None, count: int = 72, seed: int = 0,
                   **membership_opts) -> SandwichReport:
    """Check inner => sampled => outer membership per direction.

    The fan is taken at the caller's word as a joint prederivative at the base
    point; the hypotheses behind the two approximations are recorded by the
    caller, not re-derived here.  Chain breaks are data, never exceptions.
    """
    n_p, n_x = prob.map.n_p, prob.map.n_x
    pbar = as_vector(pbar, n_p, "pbar")
    xbar = as_vector(xbar, n_x, "xbar")
    if directions is None:
        directions = direction_grid(n_p, n_x, count, seed)
    F_base = image_set(prob, pbar, xbar)
    cache = membership_opts.pop("cache", None) or SolvCache()
    rows = []
    violations = []
    for d in np.atleast_2d(np.asarray(directions, dtype=float)):
        q, v = d[:n_p], d[n_p:]
        inner = inner_approx_member(H_joint, prob.cone, q, v)
        outer = outer_approx_member(H_joint, prob.cone, F_base, q, v)
        verdict = contingent_member_graph(prob, pbar, xbar, q, v,
                                          cache=cache, **membership_opts)
        row = SandwichRow(q, v, inner, verdict.member, outer, verdict.min_ratio)
        rows.append(row)
        if inner and not verdict.member:
            violations.append(SandwichViolation(row, "inner-not-sampled"))
        if verdict.member and not outer:
            violations.append(SandwichViolation(row, "sampled-not-outer"))
    return SandwichReport(tuple(rows), tuple(violations))
