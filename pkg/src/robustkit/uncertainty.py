"""Geometry of the noise sets that perturb each constraint.

Every constraint in a robust feasibility problem owns a noise vector living
in a compact convex set.  The solvers only ever touch that set through a
small interface: membership, Euclidean projection, maximizing a linear
functional, diameters, and boundary sampling.  The Euclidean ball is the
only concrete set shipped here; everything downstream is written against
the interface so other sets can be added without touching the solvers.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "UncertaintySet",
    "BallSet",
    "project_ball",
    "ball_linear_max",
    "sample_sphere",
]


class UncertaintySet(abc.ABC):
    """Interface the solvers use to interact with a noise set."""

    dimension: int

    @abc.abstractmethod
    def contains(self, u: np.ndarray, tol: float = 1e-9) -> bool:
        """Whether ``u`` lies in the set, up to ``tol`` slack."""

    def contains_all(self, block: np.ndarray, tol: float = 1e-9) -> bool:
        """Whether every row of ``block`` lies in the set."""
        return all(self.contains(row, tol) for row in block)

    @abc.abstractmethod
    def project(self, v: np.ndarray) -> np.ndarray:
        """Euclidean projection of ``v`` onto the set."""

    @abc.abstractmethod
    def linear_max(self, g: np.ndarray) -> np.ndarray:
        """An exact maximizer of ``g . u`` over the set."""

    @abc.abstractmethod
    def sample_boundary(self, rng: np.random.Generator) -> np.ndarray:
        """A random extreme point (used by sampled verification)."""

    @property
    @abc.abstractmethod
    def l2_diameter(self) -> float:
        ...

    @property
    @abc.abstractmethod
    def l1_diameter(self) -> float:
        ...


@dataclass(frozen=True)
class BallSet(UncertaintySet):
    """Euclidean ball of a given radius centered at the origin."""

    dimension: int
    radius: float = 1.0

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dimension}")
        if not np.isfinite(self.radius) or self.radius <= 0:
            raise ValueError(f"radius must be positive and finite, got {self.radius}")

    @property
    def center(self) -> np.ndarray:
        return np.zeros(self.dimension)

    @property
    def l2_diameter(self) -> float:
        return 2.0 * self.radius

    @property
    def l1_diameter(self) -> float:
        # The l1-farthest pair on an l2 ball is +/- the uniform sign vector.
        return 2.0 * self.radius * np.sqrt(self.dimension)

    def contains(self, u: np.ndarray, tol: float = 1e-9) -> bool:
        u = np.asarray(u, dtype=float)
        if u.shape != (self.dimension,):
            raise ValueError(f"expected shape ({self.dimension},), got {u.shape}")
        if not np.all(np.isfinite(u)):
            return False
        return float(np.linalg.norm(u)) <= self.radius + tol

    def contains_all(self, block: np.ndarray, tol: float = 1e-9) -> bool:
        block = np.asarray(block, dtype=float)
        if block.ndim != 2 or block.shape[1] != self.dimension:
            raise ValueError(f"expected rows of length {self.dimension}, got {block.shape}")
        if not np.all(np.isfinite(block)):
            return False
        norms = np.linalg.norm(block, axis=1)
        return bool(np.all(norms <= self.radius + tol))

    def project(self, v: np.ndarray) -> np.ndarray:
        return project_ball(v, self)

    def linear_max(self, g: np.ndarray) -> np.ndarray:
        return ball_linear_max(g, self)

    def sample_boundary(self, rng: np.random.Generator) -> np.ndarray:
        return sample_sphere(self, rng)


def _as_vector(v: np.ndarray, dimension: int) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (dimension,):
        raise ValueError(f"expected shape ({dimension},), got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


def project_ball(v: np.ndarray, ball: BallSet) -> np.ndarray:
    """Euclidean projection onto the ball.

    Points inside are returned unchanged; points outside are radially
    rescaled to the boundary, which is the unique nearest point.
    """
    v = _as_vector(v, ball.dimension)
    norm = float(np.linalg.norm(v))
    if norm <= ball.radius:
        return v
    return (ball.radius / norm) * v


def ball_linear_max(g: np.ndarray, ball: BallSet) -> np.ndarray:
    """Maximize ``g . u`` over the ball: the scaled unit vector along ``g``.

    The zero functional is maximized by the center (any point would do;
    the center keeps the map deterministic).
    """
    g = _as_vector(g, ball.dimension)
    norm = float(np.linalg.norm(g))
    if norm == 0.0:
        return np.zeros(ball.dimension)
    return (ball.radius / norm) * g


def sample_sphere(ball: BallSet, rng: np.random.Generator) -> np.ndarray:
    """Uniform sample from the boundary sphere (normalized Gaussian)."""
    while True:
        z = rng.standard_normal(ball.dimension)
        norm = float(np.linalg.norm(z))
        if norm > 1e-12:  # astronomically rare rejection
            if ball.dimension == 1:
                # The 0-sphere is {-radius, +radius}; keep it exact.
                return np.array([math.copysign(ball.radius, z[0])])
            return (ball.radius / norm) * z
