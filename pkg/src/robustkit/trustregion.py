"""Maximizing quadratics over the unit ball.

The worst-case noise of a quadratic constraint is the maximizer of
``u' Q u + 2 r . u`` over the Euclidean unit ball.  This is the classic
trust-region subproblem, solved globally here via an eigendecomposition
of Q and a safeguarded Newton search on the secular equation, including
the hard case where the linear term is orthogonal to the top eigenspace.

Indefinite and negative-definite Q are supported; the returned multiplier
satisfies the stationarity condition (lam*I - Q) u = r with lam >= lam_max(Q)
whenever the solution lies on the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

__all__ = [
    "TrsProblem",
    "TrsSolution",
    "BruteForceResult",
    "trs_max_on_ball",
    "trs_min_on_ball",
    "trs_brute_force",
]

# Relative threshold below which the linear term is treated as orthogonal
# to the top eigenspace (the hard case).
_HARD_CASE_RTOL = 1e-10
_MAX_ROOT_ITERS = 200


@dataclass(frozen=True)
class TrsProblem:
    """max  u' Q u + 2 r . u  subject to ||u||_2 <= 1."""

    matrix: np.ndarray
    linear: np.ndarray
    tolerance: float = 1e-9

    def __post_init__(self) -> None:
        q = np.asarray(self.matrix, dtype=float)
        r = np.asarray(self.linear, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ValueError(f"matrix must be square, got shape {q.shape}")
        if r.shape != (q.shape[0],):
            raise ValueError(f"linear term shape {r.shape} does not match matrix {q.shape}")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(r))):
            raise ValueError("non-finite entries in quadratic data")
        if not (self.tolerance >= 0 and math.isfinite(self.tolerance)):
            raise ValueError(f"tolerance must be a finite nonnegative real, got {self.tolerance}")
        object.__setattr__(self, "matrix", 0.5 * (q + q.T))
        object.__setattr__(self, "linear", r)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def value(self, u: np.ndarray) -> float:
        u = np.asarray(u, dtype=float)
        return float(u @ self.matrix @ u + 2.0 * self.linear @ u)


class TrsSolution(NamedTuple):
    point: np.ndarray
    value: float
    multiplier: float
    on_boundary: bool


class BruteForceResult(NamedTuple):
    point: np.ndarray
    value: float
    error_bound: float


def trs_max_on_ball(problem: TrsProblem) -> TrsSolution:
    """Globally maximize the quadratic over the unit ball.

    Strategy: diagonalize Q, then either take the interior stationary
    point (only optimal when Q is negative definite and the point fits
    inside the ball) or solve the boundary secular equation
    ``sum_j c_j^2 / (lam - d_j)^2 = 1`` for lam just above the top
    eigenvalue.  When the linear term has no component on the top
    eigenspace the secular equation may have no root; the solution is
    then assembled from the orthogonal complement plus a top eigenvector.
    """
    q, r = problem.matrix, problem.linear
    k = problem.dimension

    eigvals, eigvecs = np.linalg.eigh(q)
    d_max = float(eigvals[-1])
    c = eigvecs.T @ r
    r_norm = float(np.linalg.norm(r))
    q_scale = float(np.linalg.norm(q, "fro"))

    # Interior stationary point, optimal only for strictly concave objectives.
    if d_max < 0:
        interior = eigvecs @ (-c / eigvals)
        if float(np.linalg.norm(interior)) <= 1.0:
            return TrsSolution(interior, problem.value(interior), 0.0, False)

    if r_norm == 0.0 and q_scale == 0.0:
        return TrsSolution(np.zeros(k), 0.0, 0.0, False)

    gap_tol = 1e-12 * max(1.0, abs(d_max), q_scale)
    top = eigvals >= d_max - gap_tol
    c_top_norm = float(np.linalg.norm(c[top]))

    if c_top_norm <= _HARD_CASE_RTOL * max(r_norm, 1.0):
        # Hard case: the secular root at lam = d_max may fall short of the
        # boundary.  Build the complement part and pad with a top eigenvector.
        coeff = np.where(top, 0.0, c / np.where(top, 1.0, d_max - eigvals))
        u_perp = eigvecs @ coeff
        perp_norm = float(np.linalg.norm(u_perp))
        if perp_norm <= 1.0:
            v_top = eigvecs[:, -1]
            if float(r @ v_top) < 0:
                v_top = -v_top
            u = u_perp + math.sqrt(max(0.0, 1.0 - perp_norm**2)) * v_top
            return TrsSolution(u, problem.value(u), d_max, True)
        # Complement alone already overshoots: a genuine root exists beyond
        # d_max even though the top coefficient vanishes.

    lam = _secular_root(eigvals, c, d_max, r_norm + q_scale)
    u = eigvecs @ (c / (lam - eigvals))
    norm = float(np.linalg.norm(u))
    if norm > 0:
        u = u / norm
    return TrsSolution(u, problem.value(u), lam, True)


def trs_min_on_ball(problem: TrsProblem) -> TrsSolution:
    """Globally minimize the quadratic over the unit ball (negated max)."""
    flipped = TrsProblem(-problem.matrix, -problem.linear, problem.tolerance)
    sol = trs_max_on_ball(flipped)
    return TrsSolution(sol.point, -sol.value, sol.multiplier, sol.on_boundary)


def _secular_root(eigvals: np.ndarray, c: np.ndarray, d_max: float, span: float) -> float:
    """Root of ||(lam I - D)^-1 c|| = 1 on (d_max, d_max + span].

    Bisection on the monotone reparametrization 1/||u(lam)|| - 1, polished
    with safeguarded Newton steps.  The bracket is theoretically guaranteed:
    the norm blows up at d_max+ and drops below 1 at the right endpoint.
    """
    d = [float(v) for v in eigvals]
    c2 = [float(v) ** 2 for v in c]
    terms = [(ci, di) for ci, di in zip(c2, d) if ci > 0.0]

    def norm_sq_and_slope(lam: float) -> tuple[float, float]:
        s = 0.0
        ds = 0.0
        for ci, di in terms:
            inv = 1.0 / (lam - di)
            s += ci * inv * inv
            ds += ci * inv * inv * inv
        return s, -2.0 * ds

    lo = d_max
    hi = d_max + max(span, 1e-30)
    # Expand defensively; with exact arithmetic the right endpoint suffices.
    for _ in range(64):
        s, _ = norm_sq_and_slope(hi)
        if s <= 1.0:
            break
        hi = d_max + 2.0 * (hi - d_max)

    lam = 0.5 * (lo + hi)
    for _ in range(_MAX_ROOT_ITERS):
        s, slope = norm_sq_and_slope(lam)
        w = math.sqrt(s)
        h = 1.0 / w - 1.0  # increasing in lam, root at ||u|| = 1
        if h < 0.0:
            lo = lam
        else:
            hi = lam
        if abs(h) <= 1e-14 or hi - lo <= 1e-15 * max(1.0, abs(lam)):
            break
        # Newton on h: h'(lam) = -s'(lam) / (2 s^{3/2})
        h_slope = -slope / (2.0 * s * w)
        step = lam - h / h_slope if h_slope > 0 else None
        if step is not None and lo < step < hi:
            lam = step
        else:
            lam = 0.5 * (lo + hi)
    return lam


def trs_brute_force(problem: TrsProblem, resolution: int = 20_000) -> BruteForceResult:
    """Grid search over the ball for small dimensions (sanity oracle).

    Returns the best grid point, its value, and a Lipschitz error bound:
    the true maximum exceeds the grid maximum by at most
    ``lipschitz * covering_radius`` of the grid.  Only meant for K <= 3.
    """
    k = problem.dimension
    if k > 3:
        raise ValueError(f"brute force supports dimension <= 3, got {k}")
    if resolution < 8:
        raise ValueError("resolution too small to build a grid")

    points, spacing = _ball_grid(k, resolution)
    values = np.einsum("nk,kl,nl->n", points, problem.matrix, points)
    values = values + 2.0 * points @ problem.linear
    best = int(np.argmax(values))

    lipschitz = 2.0 * (float(np.linalg.norm(problem.matrix, "fro")) + float(np.linalg.norm(problem.linear)))
    return BruteForceResult(points[best], float(values[best]), lipschitz * spacing)


def _ball_grid(k: int, resolution: int) -> tuple[np.ndarray, float]:
    """Deterministic grid covering the unit ball; returns (points, covering radius)."""
    if k == 1:
        n = max(resolution, 3)
        pts = np.linspace(-1.0, 1.0, n)[:, None]
        return pts, 1.0 / (n - 1)
    if k == 2:
        n_theta = max(8, int(math.ceil(2.0 * math.sqrt(resolution))))
        n_rad = max(2, resolution // n_theta)
        theta = np.linspace(0.0, 2.0 * math.pi, n_theta, endpoint=False)
        radii = np.linspace(0.0, 1.0, n_rad)
        ring = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        pts = (radii[:, None, None] * ring[None, :, :]).reshape(-1, 2)
        spacing = max(1.0 / (n_rad - 1), 2.0 * math.sin(math.pi / n_theta))
        return pts, spacing
    # k == 3: Fibonacci sphere shells.
    n_rad = max(2, int(round(resolution ** (1.0 / 3.0))))
    n_sph = max(16, resolution // n_rad)
    sphere = _fibonacci_sphere(n_sph)
    radii = np.linspace(0.0, 1.0, n_rad)
    pts = (radii[:, None, None] * sphere[None, :, :]).reshape(-1, 3)
    # ~3.1/sqrt(N) is a safe covering-radius estimate for Fibonacci layouts.
    spacing = max(1.0 / (n_rad - 1), 3.1 / math.sqrt(n_sph))
    return pts, spacing


def _fibonacci_sphere(n: int) -> np.ndarray:
    i = np.arange(n, dtype=float)
    golden = (1.0 + math.sqrt(5.0)) / 2.0
    z = 1.0 - (2.0 * i + 1.0) / n
    rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = 2.0 * math.pi * i / golden
    return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)
