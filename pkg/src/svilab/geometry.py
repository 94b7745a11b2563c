"""Polyhedral-cone geometry: distances, excess, Pontryagin difference, core measure.

Two set representations cover everything downstream:

* ``PolyhedralCone`` -- a closed convex cone ``{y : <a_i, y> >= 0}`` described
  by unit inward normals ``a_i``.  An empty normal list is the whole space.
* ``GeneratorSet`` -- a nonempty finite point list plus an optional recession
  cone, standing for ``points + cone`` (Minkowski sum); with no recession cone
  the set is the finite point list itself.

All distances are Euclidean.  Projection onto a cone whose normals are
pairwise orthogonal (orthants, single halfspaces) has a closed form; the
general polyhedral case runs a cyclic Dykstra scheme over the halfspaces,
accurate to ``TOL_PROJ``.

Unbounded generator sets are accepted only when their recession cone equals
the reference cone of the operation (the one case where the excess stays
finite and reduces to the generators); anything else raises
``UnsupportedRecession``.  The convention sup over an empty set = -inf never
fires because generator sets are nonempty by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .regions import as_vector

TOL_UNIT = 1e-12
TOL_PROJ = 1e-10
TOL_ACTIVE = 1e-9
TOL_FEAS = 1e-9
DYKSTRA_MAX_CYCLES = 10_000


class DimensionMismatch(ValueError):
    """Operands live in different ambient dimensions."""


class UnsupportedRecession(ValueError):
    """Recession-cone combination under which the result may be infinite."""


class PolyhedralCone:
    """Closed convex cone {y : <a_i, y> >= 0} given by unit inward normals."""

    def __init__(self, dim: int, normals=()):
        self.dim = int(dim)
        if self.dim < 1:
            raise ValueError(f"cone dimension must be >= 1, got {dim}")
        arr = np.asarray(normals, dtype=float)
        if arr.size == 0:
            arr = np.zeros((0, self.dim))
        arr = arr.reshape(-1, self.dim)
        if not np.all(np.isfinite(arr)):
            raise ValueError("cone normals must be finite")
        lengths = np.linalg.norm(arr, axis=1)
        if arr.shape[0] and np.max(np.abs(lengths - 1.0)) > TOL_UNIT:
            raise ValueError("cone normals must have unit Euclidean norm (within 1e-12)")
        self.normals = arr
        self._witness: np.ndarray | None = None
        self._witness_known = False

    @classmethod
    def orthant(cls, m: int) -> "PolyhedralCone":
        """Nonnegative orthant of R^m, normals e_1..e_m."""
        return cls(m, np.eye(m))

    @classmethod
    def halfspace(cls, normal) -> "PolyhedralCone":
        """Single halfspace {y : <a, y> >= 0}; the normal is renormalized."""
        a = as_vector(normal, name="normal")
        n = np.linalg.norm(a)
        if n < TOL_UNIT:
            raise ValueError("halfspace normal must be nonzero")
        return cls(a.size, (a / n)[None, :])

    @classmethod
    def whole_space(cls, dim: int) -> "PolyhedralCone":
        return cls(dim, ())

    @property
    def n_constraints(self) -> int:
        return self.normals.shape[0]

    @property
    def is_orthogonal_family(self) -> bool:
        """True when the normals are pairwise orthogonal (closed-form projection)."""
        k = self.n_constraints
        if k <= 1:
            return True
        gram = self.normals @ self.normals.T
        off = gram - np.eye(k)
        return bool(np.max(np.abs(off)) <= 1e-12)

    def inner(self, y: np.ndarray) -> np.ndarray:
        return self.normals @ y

    def contains(self, y, tol: float = TOL_FEAS) -> bool:
        y = as_vector(y, self.dim, "point")
        if self.n_constraints == 0:
            return True
        return bool(np.min(self.inner(y)) >= -tol)

    def contains_many(self, Y: np.ndarray, tol: float = TOL_FEAS) -> np.ndarray:
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if self.n_constraints == 0:
            return np.ones(Y.shape[0], dtype=bool)
        return (Y @ self.normals.T >= -tol).all(axis=1)

    def project(self, y) -> np.ndarray:
        y = as_vector(y, self.dim, "point")
        if self.n_constraints == 0:
            return y.copy()
        g = self.inner(y)
        if np.min(g) >= 0.0:
            return y.copy()
        if self.is_orthogonal_family:
            # independent coordinates along the orthonormal normals
            return y - np.minimum(g, 0.0) @ self.normals
        return _dykstra(self.normals, y)

    def dist(self, y) -> float:
        y = as_vector(y, self.dim, "point")
        if self.n_constraints == 0:
            return 0.0
        g = self.inner(y)
        if np.min(g) >= 0.0:
            return 0.0
        if self.is_orthogonal_family:
            neg = np.minimum(g, 0.0)
            return float(math.sqrt(float(neg @ neg)))
        return float(np.linalg.norm(y - _dykstra(self.normals, y)))

    def dist_many(self, Y: np.ndarray) -> np.ndarray:
        """Distances of the rows of Y to the cone."""
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if self.n_constraints == 0:
            return np.zeros(Y.shape[0])
        if self.is_orthogonal_family:
            neg = np.minimum(Y @ self.normals.T, 0.0)
            return np.sqrt(np.einsum("ij,ij->i", neg, neg))
        return np.array([self.dist(row) for row in Y])

    def interior_witness(self, tol: float = 1e-9) -> np.ndarray | None:
        """A point with min_i <a_i, y> > 0, or None if int C is empty.

        The sum of the normals is tried first; otherwise a Chebyshev-style LP
        (max t s.t. A y >= t, |y|_inf <= 1) certifies the interior.
        """
        if self._witness_known:
            return self._witness
        witness = None
        if self.n_constraints == 0:
            witness = np.zeros(self.dim)
        else:
            candidate = self.normals.sum(axis=0)
            if np.min(self.inner(candidate)) > tol:
                witness = candidate
            else:
                from scipy.optimize import linprog

                # variables (y, t); maximize t subject to <a_i,y> - t >= 0
                c = np.zeros(self.dim + 1)
                c[-1] = -1.0
                a_ub = np.hstack([-self.normals, np.ones((self.n_constraints, 1))])
                b_ub = np.zeros(self.n_constraints)
                bounds = [(-1.0, 1.0)] * self.dim + [(None, 1.0)]
                res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
                if res.status == 0 and res.x is not None and res.x[-1] > tol:
                    witness = np.asarray(res.x[:-1], dtype=float)
        self._witness = witness
        self._witness_known = True
        return witness

    def same_cone(self, other: "PolyhedralCone", tol: float = 1e-9) -> bool:
        """Equality as halfspace descriptions (normal sets match up to order)."""
        if self.dim != other.dim or self.n_constraints != other.n_constraints:
            return False
        used = [False] * other.n_constraints
        for a in self.normals:
            hit = False
            for j, b in enumerate(other.normals):
                if not used[j] and np.max(np.abs(a - b)) <= tol:
                    used[j] = True
                    hit = True
                    break
            if not hit:
                return False
        return True

    def __repr__(self) -> str:
        return f"PolyhedralCone(dim={self.dim}, n_constraints={self.n_constraints})"


def _dykstra(normals: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Dykstra's cyclic projection onto the intersection of halfspaces."""
    k = normals.shape[0]
    x = y.copy()
    corrections = np.zeros((k, y.size))
    for _ in range(DYKSTRA_MAX_CYCLES):
        x_prev = x.copy()
        for i in range(k):
            w = x + corrections[i]
            g = float(normals[i] @ w)
            x = w - min(g, 0.0) * normals[i]
            corrections[i] = w - x
        if np.max(np.abs(x - x_prev)) <= TOL_PROJ:
            break
    return x


class GeneratorSet:
    """Nonempty finite point list plus an optional recession cone."""

    def __init__(self, points, recession: PolyhedralCone | None = None):
        arr = np.asarray(points, dtype=float)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
            raise ValueError(f"points must be a nonempty list of vectors, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("generator points must be finite")
        if recession is not None and recession.dim != arr.shape[1]:
            raise DimensionMismatch(
                f"recession cone dimension {recession.dim} != point dimension {arr.shape[1]}")
        self.points = arr
        self.recession = recession

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    def __repr__(self) -> str:
        tail = "" if self.recession is None else f", recession={self.recession!r}"
        return f"GeneratorSet({self.n_points} points, dim={self.dim}{tail})"


def _check_dims(a_dim: int, b_dim: int, what: str) -> None:
    if a_dim != b_dim:
        raise DimensionMismatch(f"{what}: dimensions {a_dim} and {b_dim} differ")


def dist_point_to_cone(y, C: PolyhedralCone) -> float:
    """Euclidean distance from y to the cone.

    Closed form ||min(y, 0)|| for the orthant and max(0, -<a, y>) for a single
    halfspace (both via the orthogonal-family formula); general polyhedra go
    through the Dykstra projection.
    """
    y = as_vector(y, name="point")
    _check_dims(y.size, C.dim, "dist_point_to_cone")
    return C.dist(y)


def dist_point_to_set(y, S: GeneratorSet) -> float:
    """Distance from y to a generator set: min over b of dist(y - b, recession)."""
    y = as_vector(y, name="point")
    _check_dims(y.size, S.dim, "dist_point_to_set")
    diffs = y[None, :] - S.points
    if S.recession is None:
        return float(np.min(np.linalg.norm(diffs, axis=1)))
    return float(np.min(S.recession.dist_many(diffs)))


def excess(A: GeneratorSet, C: PolyhedralCone) -> float:
    """Excess of A over the cone C: sup over A of dist(., C).

    With recession cone equal to C the recession part never increases the
    distance, so the supremum is attained at the generators.
    """
    _check_dims(A.dim, C.dim, "excess")
    if A.recession is not None and not A.recession.same_cone(C):
        raise UnsupportedRecession(
            "excess over C supports only recession cone equal to C; the excess "
            "of a set with a different recession cone may be infinite")
    return float(np.max(C.dist_many(A.points)))


def excess_set_set(A: GeneratorSet, B: GeneratorSet) -> float:
    """Excess of A over B: sup over a in A of dist(a, B).

    A must be finite, or share its recession cone with B; otherwise the
    supremum can be infinite and the representation is rejected.
    """
    _check_dims(A.dim, B.dim, "excess_set_set")
    if A.recession is not None:
        if B.recession is None or not A.recession.same_cone(B.recession):
            raise UnsupportedRecession(
                "excess of an unbounded set is supported only when both operands "
                "share the same recession cone")
    return max(dist_point_to_set(a, B) for a in A.points)


def hausdorff(A: GeneratorSet, B: GeneratorSet) -> float:
    """Pompeiu-Hausdorff distance: max of the two excesses."""
    return max(excess_set_set(A, B), excess_set_set(B, A))


@dataclass(frozen=True, eq=False)
class HalfspaceSet:
    """Intersection of halfspaces {y : <a_i, y> >= b_i}."""

    normals: np.ndarray
    offsets: np.ndarray

    def contains(self, y, tol: float = TOL_FEAS) -> bool:
        y = as_vector(y, name="point")
        if self.normals.shape[0] == 0:
            return True
        return bool(np.min(self.normals @ y - self.offsets) >= -tol)


def star_difference(C: PolyhedralCone, S: GeneratorSet) -> HalfspaceSet:
    """Pontryagin difference C (-) S = {y : y + S subset of C}.

    Exact for polyhedral C and finite generators: the i-th offset is
    -min over generators s of <a_i, s>.  A recession part equal to C
    contributes nothing (its products with the normals are >= 0 with inf 0).
    """
    _check_dims(C.dim, S.dim, "star_difference")
    if S.recession is not None and not S.recession.same_cone(C):
        raise UnsupportedRecession(
            "star_difference supports subtrahend recession cones equal to C only")
    if C.n_constraints == 0:
        return HalfspaceSet(np.zeros((0, C.dim)), np.zeros(0))
    offsets = -np.min(S.points @ C.normals.T, axis=0)
    return HalfspaceSet(C.normals.copy(), offsets)


@dataclass(frozen=True)
class CoreMeasure:
    """Radius of the largest centered ball inside C (-) S.

    ``empty`` distinguishes the degenerate value 0 reached because S touches
    the boundary of C (0 is in the difference, but no positive radius fits)
    from the value 0 reported because S is not even contained in C (the set of
    admissible radii is empty outright).
    """

    value: float
    empty: bool

    def __float__(self) -> float:
        return self.value


def core_measure(C: PolyhedralCone, S: GeneratorSet) -> CoreMeasure:
    """How strictly S sits inside C: sup{r > 0 : r*ball subset of C (-) S}.

    With unit normals the ball constraint per halfspace is -r >= b_i, so the
    supremum equals max(0, min_i min_s <a_i, s>).
    """
    _check_dims(C.dim, S.dim, "core_measure")
    if S.recession is not None and not S.recession.same_cone(C):
        raise UnsupportedRecession(
            "core_measure supports subtrahend recession cones equal to C only")
    if C.n_constraints == 0:
        return CoreMeasure(math.inf, False)
    q = float(np.min(S.points @ C.normals.T))
    return CoreMeasure(max(0.0, q), q < 0.0)


def tangent_cone(C: PolyhedralCone, y, tol_active: float = TOL_ACTIVE,
                 tol_feas: float = TOL_FEAS) -> PolyhedralCone:
    """Tangent cone T(C; y): the halfspaces active at y (all of space if none).

    Ties are resolved by inclusion: the i-th normal is kept whenever
    <a_i, y> <= tol_active.
    """
    y = as_vector(y, C.dim, "point")
    if not C.contains(y, tol_feas):
        raise ValueError(f"tangent_cone requires a point of the cone; <a_i,y> min is "
                         f"{float(np.min(C.inner(y))) if C.n_constraints else 0.0:.3e}")
    if C.n_constraints == 0:
        return PolyhedralCone.whole_space(C.dim)
    active = C.inner(y) <= tol_active
    return PolyhedralCone(C.dim, C.normals[active])
