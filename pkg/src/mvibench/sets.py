"""Projectable convex sets.

Three closed-form variants cover every feasible region used by the solvers:
axis-aligned boxes, the nonnegative orthant, and the intersection of a box
with a single halfspace (projected by Dykstra's alternating scheme).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DYKSTRA_MOVE_TOL = 1e-12
DYKSTRA_MAX_SWEEPS = 10_000


def _as_vector(v, d: int, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 0:
        arr = np.full(d, float(arr))
    if arr.shape != (d,):
        raise ValueError(f"{name} must have shape ({d},), got {arr.shape}")
    return arr


class ConvexSet:
    """Base class: a closed convex set with an exact Euclidean projection."""

    dim: int

    def project(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size: int | None = None,
               scale: float = 10.0) -> np.ndarray:
        """Uniform-ish samples from (a bounded portion of) the set."""
        raise NotImplementedError

    def contains(self, z: np.ndarray, tol: float = 1e-9) -> bool:
        z = np.asarray(z, dtype=float)
        return bool(np.linalg.norm(self.project(z) - z) <= tol)

    def _check_dim(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.shape != (self.dim,):
            raise ValueError(
                f"point has shape {z.shape}, set has dimension {self.dim}")
        return z


@dataclass(frozen=True)
class Box(ConvexSet):
    """Axis-aligned box ``{z : lower <= z <= upper}``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.lower, dtype=float).size
        object.__setattr__(self, "lower", _as_vector(self.lower, d, "lower"))
        object.__setattr__(self, "upper", _as_vector(self.upper, d, "upper"))
        if np.any(self.lower > self.upper):
            raise ValueError("empty box: lower > upper componentwise")

    @property
    def dim(self) -> int:
        return self.lower.size

    def project(self, z: np.ndarray) -> np.ndarray:
        z = self._check_dim(z)
        return np.minimum(np.maximum(z, self.lower), self.upper)

    def sample(self, rng, size=None, scale=10.0):
        if size is None:
            return rng.uniform(self.lower, self.upper)
        return rng.uniform(self.lower, self.upper, size=(size, self.dim))


@dataclass(frozen=True)
class NonnegOrthant(ConvexSet):
    """Nonnegative orthant ``{z >= 0}`` in ``d`` dimensions."""

    d: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be positive")

    @property
    def dim(self) -> int:
        return self.d

    def project(self, z: np.ndarray) -> np.ndarray:
        z = self._check_dim(z)
        return np.maximum(z, 0.0)

    def sample(self, rng, size=None, scale=10.0):
        # The orthant is unbounded; samples are drawn from [0, scale]^d.
        if size is None:
            return rng.uniform(0.0, scale, size=self.d)
        return rng.uniform(0.0, scale, size=(size, self.d))


@dataclass(frozen=True)
class BoxHalfspace(ConvexSet):
    """Box intersected with one halfspace ``{z : a.z <= b}``.

    Nonemptiness is verified at construction; projection uses Dykstra's
    alternating projections between the box and the halfspace.
    """

    lower: np.ndarray
    upper: np.ndarray
    a: np.ndarray
    b: float
    _box: Box = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        box = Box(self.lower, self.upper)
        object.__setattr__(self, "lower", box.lower)
        object.__setattr__(self, "upper", box.upper)
        object.__setattr__(self, "a", _as_vector(self.a, box.dim, "a"))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "_box", box)
        if np.linalg.norm(self.a) == 0.0:
            raise ValueError("halfspace normal must be nonzero")
        # min of a.z over the box, attained at a vertex
        min_az = float(np.sum(np.minimum(self.a * self.lower,
                                         self.a * self.upper)))
        if min_az > self.b:
            raise ValueError(
                f"empty intersection: min a.z over box is {min_az} > {self.b}")

    @property
    def dim(self) -> int:
        return self.lower.size

    def _project_halfspace(self, z: np.ndarray) -> np.ndarray:
        viol = float(self.a @ z) - self.b
        if viol <= 0.0:
            return z
        return z - (viol / float(self.a @ self.a)) * self.a

    def project(self, z: np.ndarray) -> np.ndarray:
        z = self._check_dim(z)
        x = z.copy()
        p = np.zeros_like(z)  # box correction
        q = np.zeros_like(z)  # halfspace correction
        for _ in range(DYKSTRA_MAX_SWEEPS):
            # the iterate x may repeat while the corrections still move,
            # so convergence must watch p and q as well
            x_old, p_old, q_old = x, p, q
            y = self._box.project(x + p)
            p = x + p - y
            x = self._project_halfspace(y + q)
            q = y + q - x
            moved = (np.linalg.norm(x - x_old) + np.linalg.norm(p - p_old)
                     + np.linalg.norm(q - q_old))
            if moved < DYKSTRA_MOVE_TOL:
                break
        return x

    def sample(self, rng, size=None, scale=10.0):
        # Box samples pushed into the intersection; biased toward the
        # boundary but adequate for diagnostics and lower bounds.
        if size is None:
            return self.project(self._box.sample(rng))
        pts = self._box.sample(rng, size=size)
        return np.array([self.project(p) for p in pts])


def project(cset: ConvexSet, z: np.ndarray) -> np.ndarray:
    """Euclidean projection of ``z`` onto ``cset``."""
    return cset.project(z)
