"""Sampling regions, grids, and the direction/radius schedules shared by estimators."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def as_vector(v, dim: int | None = None, name: str = "vector") -> np.ndarray:
    """Coerce to a finite 1-d float array, optionally enforcing the dimension."""
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a nonempty 1-d sequence, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries: {arr!r}")
    if dim is not None and arr.size != dim:
        raise ValueError(f"{name} has dimension {arr.size}, expected {dim}")
    return arr


@dataclass(frozen=True, eq=False)
class RegionSpec:
    """Max-norm ball B(center, radius) with a grid step and a sampling budget.

    Grid points are anchored at the center (``center + k*h`` per axis), so two
    regions with the same center and nested steps produce nested grids.
    """

    center: np.ndarray
    radius: float
    h: float = 1e-2
    count: int = 1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "center", as_vector(self.center, name="center"))
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if not self.h > 0:
            raise ValueError(f"grid step h must be positive, got {self.h}")
        if self.count < 1:
            raise ValueError(f"sample count must be >= 1, got {self.count}")

    @property
    def dim(self) -> int:
        return self.center.size

    def axis(self, i: int) -> np.ndarray:
        """Grid values along axis i: center_i + k*h for |k*h| <= radius."""
        k = int(math.floor(self.radius / self.h + 1e-9))
        offsets = np.arange(-k, k + 1, dtype=float) * self.h
        return self.center[i] + offsets

    def grid(self) -> np.ndarray:
        """All grid points as rows, in C order over the axes."""
        axes = [self.axis(i) for i in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def key(self) -> tuple:
        """Hashable identity for slice caching."""
        return (tuple(np.round(self.center, 12).tolist()), round(self.radius, 12),
                round(self.h, 15))


def geometric_schedule(start: float, levels: int, factor: float = 0.5) -> tuple[float, ...]:
    """Strictly decreasing schedule start * factor**k, k = 0..levels-1."""
    if start <= 0 or levels < 1 or not 0 < factor < 1:
        raise ValueError("schedule needs start > 0, levels >= 1, 0 < factor < 1")
    return tuple(start * factor**k for k in range(levels))


def unit_directions(dim: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Unit directions as rows: both signs for dim 1, Gaussian-normalized otherwise."""
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    raw = rng.standard_normal((count, dim))
    norms = np.linalg.norm(raw, axis=1)
    norms[norms < 1e-12] = 1.0
    return raw / norms[:, None]


def circle_directions(count: int) -> np.ndarray:
    """Evenly spaced unit directions on the plane."""
    angles = 2.0 * np.pi * np.arange(count) / count
    return np.stack([np.cos(angles), np.sin(angles)], axis=1)
