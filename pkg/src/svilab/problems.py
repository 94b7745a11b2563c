"""Parameterized scenario maps, the feasibility merit, and brute-force solvers.

A problem couples a scenario map f(p, x, w) over a finite scenario list with a
polyhedral cone C: the point x is robust-feasible at parameter p when every
scenario value lands in C.  The merit of (p, x) is the excess of the scenario
image over C; it vanishes exactly on the solution set

    Solv(p) = {x : merit(p, x) = 0}.

Two problem families are serializable: the affine family
f(p, x, w) = A_w x + B_w p + c_w, and named builtins (see ``BUILTINS``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence

import numpy as np

from .geometry import GeneratorSet, PolyhedralCone, excess
from .regions import RegionSpec, as_vector, unit_directions

FEAS_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class AffineScenario:
    """One scenario of the affine family: value A x + B p + c."""

    A: np.ndarray
    B: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "A", np.atleast_2d(np.asarray(self.A, dtype=float)))
        object.__setattr__(self, "B", np.atleast_2d(np.asarray(self.B, dtype=float)))
        object.__setattr__(self, "c", as_vector(self.c, name="c"))
        m = self.c.size
        if self.A.shape[0] != m or self.B.shape[0] != m:
            raise ValueError(
                f"scenario blocks disagree on m: A {self.A.shape}, B {self.B.shape}, c {m}")

    def value(self, p: np.ndarray, x: np.ndarray) -> np.ndarray:
        return self.A @ x + self.B @ p + self.c


class UncertainMap:
    """F(p, x) = {f(p, x, w) : w in scenarios}, one vector of R^m per scenario."""

    def __init__(self, n_p: int, n_x: int, m: int, scenarios: Sequence[Any],
                 rule: Callable[[np.ndarray, np.ndarray, Any], np.ndarray],
                 batch_rule: Callable[[np.ndarray, np.ndarray, Any], np.ndarray] | None = None,
                 kind: str = "custom"):
        if n_p < 1 or n_x < 1 or m < 1:
            raise ValueError("dimensions n_p, n_x, m must all be >= 1")
        if len(scenarios) == 0:
            raise ValueError("scenario list must be nonempty")
        self.n_p = int(n_p)
        self.n_x = int(n_x)
        self.m = int(m)
        self.scenarios = tuple(scenarios)
        self._rule = rule
        self._batch_rule = batch_rule
        self.kind = kind

    def eval(self, p, x, omega) -> np.ndarray:
        p = as_vector(p, self.n_p, "p")
        x = as_vector(x, self.n_x, "x")
        out = as_vector(self._rule(p, x, omega), self.m, "scenario value")
        return out

    def eval_all(self, p, x) -> np.ndarray:
        """Scenario values stacked as rows, shape (n_scenarios, m)."""
        return np.stack([self.eval(p, x, w) for w in self.scenarios])

    def eval_batch(self, p: np.ndarray, X: np.ndarray, omega) -> np.ndarray:
        """Values of one scenario over the rows of X, shape (N, m)."""
        if self._batch_rule is not None:
            return np.asarray(self._batch_rule(p, X, omega), dtype=float)
        return np.stack([self.eval(p, row, omega) for row in X])

    @classmethod
    def affine(cls, n_p: int, n_x: int, m: int,
               scenarios: Sequence[AffineScenario]) -> "UncertainMap":
        scen = tuple(scenarios)
        for s in scen:
            if s.A.shape != (m, n_x) or s.B.shape != (m, n_p):
                raise ValueError(f"scenario blocks must be ({m},{n_x}) and ({m},{n_p})")

        def rule(p, x, omega):
            return omega.value(p, x)

        def batch_rule(p, X, omega):
            return X @ omega.A.T + (omega.B @ p + omega.c)[None, :]

        return cls(n_p, n_x, m, scen, rule, batch_rule, kind="affine")


@dataclass(frozen=True, eq=False)
class ClosedForms:
    """Optional reference formulas attached to a problem for testing."""

    merit: Callable[[np.ndarray, np.ndarray], float] | None = None
    dist_to_solv: Callable[[np.ndarray, np.ndarray], float] | None = None
    partial_slope: Callable[[np.ndarray, np.ndarray], float] | None = None


@dataclass(frozen=True, eq=False)
class SviProblem:
    """A set-valued inclusion instance: scenario map, cone, image recession flag."""

    map: UncertainMap
    cone: PolyhedralCone
    recession_flag: bool = False
    closed_forms: Optional[ClosedForms] = None
    name: str = ""

    def __post_init__(self):
        if self.cone.dim != self.map.m:
            raise ValueError(
                f"cone dimension {self.cone.dim} != image dimension {self.map.m}")


def image_set(prob: SviProblem, p, x) -> GeneratorSet:
    """F(p, x) as a generator set; carries the cone as recession when flagged."""
    pts = prob.map.eval_all(p, x)
    return GeneratorSet(pts, prob.cone if prob.recession_flag else None)


def merit(prob: SviProblem, p, x) -> float:
    """Excess of F(p, x) over the cone; zero exactly on the solution set."""
    return excess(image_set(prob, p, x), prob.cone)


def merit_many(prob: SviProblem, p, X: np.ndarray) -> np.ndarray:
    """Merit over the rows of X at a fixed parameter (vectorized where possible)."""
    p = as_vector(p, prob.map.n_p, "p")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = None
    for omega in prob.map.scenarios:
        Y = prob.map.eval_batch(p, X, omega)
        d = prob.cone.dist_many(Y)
        out = d if out is None else np.maximum(out, d)
    return out


def is_robust_feasible(prob: SviProblem, p, x, tol: float = FEAS_TOL) -> bool:
    """True when every scenario value lies in the cone (merit <= tol)."""
    return merit(prob, p, x) <= tol


@dataclass(frozen=True)
class DescentOptions:
    step0: float = 1.0
    shrink: float = 0.5
    max_iters: int = 500
    feas_tol: float = FEAS_TOL
    n_directions: int = 16
    seed: int = 0

    def __post_init__(self):
        if not self.step0 > 0:
            raise ValueError("step0 must be positive")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")
        if not self.feas_tol > 0:
            raise ValueError("feas_tol must be positive")
        if self.max_iters < 1 or self.n_directions < 1:
            raise ValueError("max_iters and n_directions must be >= 1")


@dataclass(frozen=True, eq=False)
class DescentResult:
    x: np.ndarray
    trace: tuple[float, ...]
    converged: bool
    iterations: int


def solve_descent(prob: SviProblem, p, x0, opts: DescentOptions | None = None) -> DescentResult:
    """Derivative-free merit descent: seeded direction sampling with step backtracking.

    The first sampled direction that strictly improves the merit is taken; when
    none improves, the step shrinks.  The trace of merit values per iteration
    is nonincreasing by construction.  Exhausting max_iters yields a flagged
    best-effort result, not an error.
    """
    opts = opts or DescentOptions()
    p = as_vector(p, prob.map.n_p, "p")
    x = as_vector(x0, prob.map.n_x, "x0")
    current = merit(prob, p, x)
    if not math.isfinite(current):
        raise ValueError(f"merit at the starting point is not finite: {current}")
    trace = [current]
    if current <= opts.feas_tol:
        return DescentResult(x, tuple(trace), True, 0)
    rng = np.random.default_rng(opts.seed)
    step = opts.step0
    converged = False
    for _ in range(opts.max_iters):
        moved = False
        for u in unit_directions(prob.map.n_x, opts.n_directions, rng):
            candidate = x + step * u
            value = merit(prob, p, candidate)
            if value < current:
                x, current, moved = candidate, value, True
                break
        if not moved:
            step *= opts.shrink
        trace.append(current)
        if current <= opts.feas_tol:
            converged = True
            break
        if step < 1e-18:
            break
    return DescentResult(x, tuple(trace), converged, len(trace) - 1)


def solv_brute(prob: SviProblem, p, box: RegionSpec, feas_tol: float = FEAS_TOL) -> np.ndarray:
    """Ground-truth oracle: all grid points of the box with merit <= feas_tol.

    Returns the feasible points as rows; an empty result is a valid answer.
    """
    if box.dim != prob.map.n_x:
        raise ValueError(f"box dimension {box.dim} != n_x {prob.map.n_x}")
    X = box.grid()
    mask = merit_many(prob, p, X) <= feas_tol
    return X[mask]


class SolvCache:
    """Append-only cache of brute solution slices keyed by quantized parameters.

    Safe for concurrent readers: entries are only ever added, never mutated.
    """

    def __init__(self):
        self._slices: dict = {}

    def slice(self, prob: SviProblem, p, box: RegionSpec,
              feas_tol: float = FEAS_TOL) -> np.ndarray:
        p = as_vector(p, prob.map.n_p, "p")
        key = (tuple(np.round(p, 12).tolist()), box.key(), feas_tol)
        hit = self._slices.get(key)
        if hit is None:
            hit = solv_brute(prob, p, box, feas_tol)
            self._slices[key] = hit
        return hit

    def __len__(self) -> int:
        return len(self._slices)


# ---------------------------------------------------------------------------
# builtin problem registry


def quadratic_orthant_problem(m: int = 1) -> SviProblem:
    """Scalar inclusion with image (x^2 - p) * (1,..,1) + R^m_+ over the orthant.

    Solutions are x^2 >= p, so Solv(p) is all of R for p <= 0 and the two rays
    |x| >= sqrt(p) otherwise; the merit is sqrt(m) * max(p - x^2, 0).
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    ones = np.ones(m)
    root_m = math.sqrt(m)

    def rule(p, x, omega):
        return (x[0] * x[0] - p[0]) * ones

    def batch_rule(p, X, omega):
        vals = X[:, 0] * X[:, 0] - p[0]
        return np.outer(vals, ones)

    def merit_cf(p, x):
        return root_m * max(p[0] - x[0] * x[0], 0.0)

    def dist_cf(p, x):
        if p[0] <= 0.0:
            return 0.0
        return max(0.0, math.sqrt(p[0]) - abs(x[0]))

    def slope_cf(p, x):
        if x[0] * x[0] >= p[0]:
            return 0.0
        return 2.0 * root_m * abs(x[0])

    umap = UncertainMap(1, 1, m, ("base",), rule, batch_rule, kind="builtin")
    return SviProblem(
        map=umap,
        cone=PolyhedralCone.orthant(m),
        recession_flag=True,
        closed_forms=ClosedForms(merit=merit_cf, dist_to_solv=dist_cf, partial_slope=slope_cf),
        name=f"paper-sec3-example(m={m})",
    )


def robust_affine_problem() -> SviProblem:
    """Robust scalar inequality -x + p + w >= 0 over the two scenarios w in {0, 1}.

    Solv(p) = (-inf, p] and the merit is max(0, x - p); the instance is
    C-concave, so its solution mapping has a convex graph.
    """
    scenarios = (AffineScenario(A=[[-1.0]], B=[[1.0]], c=[0.0]),
                 AffineScenario(A=[[-1.0]], B=[[1.0]], c=[1.0]))
    umap = UncertainMap.affine(1, 1, 1, scenarios)

    def merit_cf(p, x):
        return max(0.0, x[0] - p[0])

    def slope_cf(p, x):
        return 0.0 if x[0] <= p[0] else 1.0

    return SviProblem(
        map=umap,
        cone=PolyhedralCone.orthant(1),
        recession_flag=False,
        closed_forms=ClosedForms(merit=merit_cf, dist_to_solv=merit_cf, partial_slope=slope_cf),
        name="robust-affine",
    )


BUILTINS: dict[str, dict] = {
    "paper-sec3-example": {
        "factory": quadratic_orthant_problem,
        "n_p": 1,
        "n_x": 1,
        "m": "1 (override 1..4 accepted)",
        "closed_forms": True,
    },
    "robust-affine": {
        "factory": robust_affine_problem,
        "n_p": 1,
        "n_x": 1,
        "m": 1,
        "closed_forms": True,
    },
}


def make_builtin(name: str, **overrides) -> SviProblem:
    entry = BUILTINS.get(name)
    if entry is None:
        raise KeyError(f"unknown builtin problem {name!r}; see list_builtins()")
    return entry["factory"](**overrides)


def list_builtins() -> list[dict]:
    """Registry listing: names, dimensions, closed-form availability."""
    return [
        {"name": name, "n_p": entry["n_p"], "n_x": entry["n_x"], "m": entry["m"],
         "closed_forms": entry["closed_forms"]}
        for name, entry in sorted(BUILTINS.items())
    ]
