"""Checkers for cone-concavity of the scenario map and the convexity it induces
in the merit function and the solution mapping."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .problems import FEAS_TOL, SviProblem, is_robust_feasible, merit, solv_brute
from .regions import RegionSpec, as_vector

RAW_INCLUSION_CAP = 50


def sample_triples(prob: SviProblem, count: int, seed: int = 0,
                   p_radius: float = 1.0, x_radius: float = 2.0,
                   p_center=None, x_center=None) -> list[tuple]:
    """Seeded triples ((p1,x1), (p2,x2), t) with endpoints uniform in boxes."""
    n_p, n_x = prob.map.n_p, prob.map.n_x
    pc = as_vector(p_center, n_p, "p_center") if p_center is not None else np.zeros(n_p)
    xc = as_vector(x_center, n_x, "x_center") if x_center is not None else np.zeros(n_x)
    rng = np.random.default_rng(seed)
    triples = []
    for _ in range(count):
        p1 = pc + rng.uniform(-p_radius, p_radius, n_p)
        p2 = pc + rng.uniform(-p_radius, p_radius, n_p)
        x1 = xc + rng.uniform(-x_radius, x_radius, n_x)
        x2 = xc + rng.uniform(-x_radius, x_radius, n_x)
        t = float(rng.uniform(0.0, 1.0))
        triples.append(((p1, x1), (p2, x2), t))
    return triples


@dataclass(frozen=True, eq=False)
class ConcavityWitness:
    p1: np.ndarray
    x1: np.ndarray
    p2: np.ndarray
    x2: np.ndarray
    t: float
    scenario_index: int
    margin: float  # most violated halfspace product, negative on violation


@dataclass(frozen=True, eq=False)
class ConcavityReport:
    passed: bool
    violations: tuple[ConcavityWitness, ...]
    n_triples: int
    n_checks: int
    raw_checked: int
    raw_violations: int


def check_C_concavity(prob: SviProblem, triples, tol: float = 1e-9,
                      raw_cap: int = RAW_INCLUSION_CAP) -> ConcavityReport:
    """Per-scenario concavity test of the scenario map on sample triples.

    For each triple and scenario w the combination gap
    f(z_mid, w) - t f(z1, w) - (1-t) f(z2, w) must lie in the cone; this
    scenario-wise condition is sufficient for concavity of the image map.  On
    top of it, the raw set inclusion (each mid generator inside the Minkowski
    combination plus cone) is spot-checked on the first ``raw_cap`` triples.
    """
    umap, cone = prob.map, prob.cone
    violations = []
    n_checks = 0
    raw_checked = 0
    raw_violations = 0
    triples = list(triples)
    for idx, ((p1, x1), (p2, x2), t) in enumerate(triples):
        p1 = as_vector(p1, umap.n_p, "p1")
        p2 = as_vector(p2, umap.n_p, "p2")
        x1 = as_vector(x1, umap.n_x, "x1")
        x2 = as_vector(x2, umap.n_x, "x2")
        pm = t * p1 + (1.0 - t) * p2
        xm = t * x1 + (1.0 - t) * x2
        vals1 = umap.eval_all(p1, x1)
        vals2 = umap.eval_all(p2, x2)
        vals_mid = umap.eval_all(pm, xm)
        gaps = vals_mid - t * vals1 - (1.0 - t) * vals2
        for k, gap in enumerate(gaps):
            n_checks += 1
            margin = float(np.min(cone.inner(gap))) if cone.n_constraints else 0.0
            if margin < -tol:
                violations.append(ConcavityWitness(p1, x1, p2, x2, t, k, margin))
        if idx < raw_cap:
            raw_checked += 1
            combos = (t * vals1[:, None, :] + (1.0 - t) * vals2[None, :, :]).reshape(-1, umap.m)
            for y in vals_mid:
                inside = cone.contains_many(y[None, :] - combos, tol)
                if not inside.any():
                    raw_violations += 1
                    break
    return ConcavityReport(not violations, tuple(violations), len(triples),
                           n_checks, raw_checked, raw_violations)


@dataclass(frozen=True, eq=False)
class ConvexityWitness:
    p1: np.ndarray
    x1: np.ndarray
    p2: np.ndarray
    x2: np.ndarray
    t: float
    lhs: float
    rhs: float


@dataclass(frozen=True, eq=False)
class ConvexityReport:
    passed: bool
    violations: tuple[ConvexityWitness, ...]
    n_triples: int


def check_merit_convexity(prob: SviProblem, triples, tol: float = 1e-9) -> ConvexityReport:
    """Convexity of the merit along sample segments in (p, x) jointly."""
    violations = []
    triples = list(triples)
    for (p1, x1), (p2, x2), t in triples:
        p1 = as_vector(p1, prob.map.n_p, "p1")
        p2 = as_vector(p2, prob.map.n_p, "p2")
        x1 = as_vector(x1, prob.map.n_x, "x1")
        x2 = as_vector(x2, prob.map.n_x, "x2")
        lhs = merit(prob, t * p1 + (1 - t) * p2, t * x1 + (1 - t) * x2)
        rhs = t * merit(prob, p1, x1) + (1 - t) * merit(prob, p2, x2)
        if lhs > rhs + tol:
            violations.append(ConvexityWitness(p1, x1, p2, x2, t, lhs, rhs))
    return ConvexityReport(not violations, tuple(violations), len(triples))


@dataclass(frozen=True, eq=False)
class SolvConvexityWitness:
    x1: np.ndarray
    x2: np.ndarray
    t: float
    x_mid: np.ndarray
    merit: float


@dataclass(frozen=True, eq=False)
class SolvConvexityReport:
    passed: bool
    violations: tuple[SolvConvexityWitness, ...]
    empty_slices: tuple[int, ...]  # which of p1/p2 had an empty brute slice
    n_checked: int


def check_solv_convexity(prob: SviProblem, p1, p2, ts=None, box: RegionSpec | None = None,
                         feas_tol: float = FEAS_TOL, max_pairs: int = 200,
                         seed: int = 0) -> SolvConvexityReport:
    """Convex-graph test of the solution mapping between two parameter slices.

    Combinations t x1 + (1-t) x2 of brute solutions must stay feasible at
    t p1 + (1-t) p2.  Pairs always include the componentwise extremes of each
    slice; the rest is a seeded subsample capped at ``max_pairs``.
    """
    p1 = as_vector(p1, prob.map.n_p, "p1")
    p2 = as_vector(p2, prob.map.n_p, "p2")
    if box is None:
        box = RegionSpec(np.zeros(prob.map.n_x), 3.0, 0.01)
    ts = tuple(ts) if ts is not None else (0.0, 0.25, 0.5, 0.75, 1.0)
    s1 = solv_brute(prob, p1, box, feas_tol)
    s2 = solv_brute(prob, p2, box, feas_tol)
    empty = tuple(i for i, s in ((1, s1), (2, s2)) if s.shape[0] == 0)
    if empty:
        return SolvConvexityReport(False, (), empty, 0)
    per_slice = max(2, math.isqrt(max_pairs))

    def picks(s: np.ndarray, rng) -> np.ndarray:
        anchors = {0, s.shape[0] - 1}
        anchors.update(int(i) for i in np.argmin(s, axis=0))
        anchors.update(int(i) for i in np.argmax(s, axis=0))
        budget = max(0, per_slice - len(anchors))
        extra = rng.choice(s.shape[0], size=min(budget, s.shape[0]), replace=False)
        idx = sorted(anchors.union(int(i) for i in extra))
        return s[idx]

    rng = np.random.default_rng(seed)
    c1 = picks(s1, rng)
    c2 = picks(s2, rng)
    violations = []
    n_checked = 0
    for x1 in c1:
        for x2 in c2:
            for t in ts:
                n_checked += 1
                xm = t * x1 + (1.0 - t) * x2
                pm = t * p1 + (1.0 - t) * p2
                if not is_robust_feasible(prob, pm, xm, feas_tol):
                    violations.append(
                        SolvConvexityWitness(x1, x2, t, xm, merit(prob, pm, xm)))
    return SolvConvexityReport(not violations, tuple(violations), (), n_checked)
