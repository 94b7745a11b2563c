"""Independent brute-force oracles used to freeze expected values in the tests.

Each oracle follows a path disjoint from the library implementation it checks:
dense sampling, binary search, exact small-case enumeration, or finite
differences.
"""

import numpy as np


def circle(n: int) -> np.ndarray:
    angles = 2.0 * np.pi * np.arange(n) / n
    return np.stack([np.cos(angles), np.sin(angles)], axis=1)


def oracle_core_orthant(S: np.ndarray, n_dirs: int = 16384, iters: int = 60) -> float:
    """core(R^2_+, S) by binary search on r with dense boundary sampling of r*B.

    A radius qualifies when every boundary point of the ball, translated by
    every generator, stays in the orthant.
    """
    S = np.atleast_2d(np.asarray(S, dtype=float))
    U = circle(n_dirs)

    def fits(r: float) -> bool:
        shifted = r * U[:, None, :] + S[None, :, :]
        return bool((shifted >= -1e-12).all())

    if not fits(0.0):
        return 0.0
    hi = 1.0
    while fits(hi) and hi < 1e6:
        hi *= 2.0
    lo = 0.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if fits(mid):
            lo = mid
        else:
            hi = mid
    return lo


def oracle_excess_dense_orthant(points: np.ndarray, reach: float = 6.0,
                                h: float = 0.05) -> float:
    """Excess of {points} + R^2_+ over R^2_+ by dense sampling of the sum
    truncated to a large box; confirms the generator-point reduction."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    ticks = np.arange(0.0, reach + h / 2, h)
    ox, oy = np.meshgrid(ticks, ticks, indexing="ij")
    offsets = np.stack([ox.ravel(), oy.ravel()], axis=1)
    worst = 0.0
    for g in points:
        samples = g[None, :] + offsets
        neg = np.minimum(samples, 0.0)
        worst = max(worst, float(np.max(np.sqrt((neg ** 2).sum(axis=1)))))
    return worst


def oracle_project_cone_2d(normals: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Exact Euclidean projection onto a 2-d polyhedral cone by enumerating the
    faces: the point itself, each facet hyperplane, each extreme ray, the apex."""
    normals = np.atleast_2d(np.asarray(normals, dtype=float))
    y = np.asarray(y, dtype=float)

    def feasible(z) -> bool:
        return bool((normals @ z >= -1e-10).all())

    if feasible(y):
        return y.copy()
    candidates = [np.zeros(2)]
    for a in normals:
        z = y - (a @ y) * a
        if feasible(z):
            candidates.append(z)
        for d in (np.array([a[1], -a[0]]), np.array([-a[1], a[0]])):
            if feasible(d):
                t = max(0.0, float(d @ y))
                candidates.append(t * d)
    best = min(candidates, key=lambda z: np.linalg.norm(y - z))
    return best


def oracle_grad_norm(phi, x0: np.ndarray, h: float = 1e-6) -> float:
    """Finite-difference gradient norm of a smooth scalar field."""
    x0 = np.asarray(x0, dtype=float)
    grad = np.zeros_like(x0)
    for i in range(x0.size):
        e = np.zeros_like(x0)
        e[i] = h
        grad[i] = (phi(x0 + e) - phi(x0 - e)) / (2.0 * h)
    return float(np.linalg.norm(grad))


def oracle_sigma_h_single_matrix_orthant(M: np.ndarray, n_dense: int = 200_000) -> float:
    """Dense-sampling value of sup over unit u of core(R^m_+, {M u}) for a
    single-matrix 2-d-domain fan: max over a fine circle of min_i (M u)_i."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    U = circle(n_dense)
    vals = (U @ M.T).min(axis=1)
    return float(max(vals.max(), 0.0))
