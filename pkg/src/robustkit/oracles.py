"""Nominal feasibility oracles and the three shipped constraint families.

Each family fixes the noise, leaving an ordinary convex feasibility
problem over the unit ball (or the PSD Frobenius ball), which is solved
by projected subgradient descent on the worst constraint value.  A
multiplicative-weights ascent on simplex weights runs alongside and
produces Lagrangian lower bounds; infeasibility is reported exactly when
such a bound is strictly positive, so every Infeasible verdict carries a
checkable certificate.  Exhausting the iteration budget raises instead
of guessing.

Families:

* linear:        (a_i + P u_i) . x <= b_i          over ||x||_2 <= 1
* quadratic:     ||(A_i + sum_k u_ik P_k) x||^2 <= b_i . x + c_i
                                                   over ||x||_2 <= 1
* semidefinite:  (A_i + sum_k u_ik P_k) . X <= b_i over X psd, ||X||_F <= 1

with every noise vector u_i ranging over the Euclidean unit ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .robust_core import (
    ConstraintSpec,
    DualCertificate,
    Feasible,
    Infeasible,
    NoiseLift,
    OracleBudgetError,
    OracleVerdict,
    PerturbationConstants,
    RobustFeasibilityProblem,
    SubgradientConstants,
    identity_lift,
)
from .trustregion import TrsProblem, trs_max_on_ball, trs_min_on_ball
from .uncertainty import BallSet

__all__ = [
    "RobustLpInstance",
    "RobustQpInstance",
    "RobustSdpInstance",
    "default_budget",
    "lp_feasibility_oracle",
    "qcqp_feasibility_oracle",
    "sdp_feasibility_oracle",
    "lp_problem",
    "qp_problem",
    "sdp_problem",
    "oracle_for",
    "build_problem",
    "lp_reward_vector",
    "quad_form_coefficients",
    "qp_noise_lift",
    "sdp_noise_gradient",
    "psd_frobenius_projection",
    "recompute_certificate",
    "generate_lp",
    "generate_infeasible_lp",
    "generate_qp",
    "generate_sdp",
    "generate_instance",
]

# Constraint values below this (scaled) threshold do not count as positive
# dual bounds; keeps floating-point noise from producing bogus certificates.
_DUAL_TOL = 1e-9

# Tiny stand-in for zero spectral scale so constants stay positive.
_SCALE_FLOOR = 1e-12


def default_budget(epsilon: float) -> int:
    """Inner-iteration allowance of the oracles: 50 * ceil(1 / eps^2)."""
    if not (epsilon > 0 and math.isfinite(epsilon)):
        raise ValueError(f"epsilon must be positive and finite, got {epsilon}")
    return 50 * math.ceil(1.0 / epsilon**2)


def _project_unit_ball(x: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(x))
    return x if norm <= 1.0 else x / norm


def _frozen_matrices(base: np.ndarray, mixing: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """Per-constraint matrices A_i + sum_k u_ik P_k for a noise assignment."""
    m = noise.shape[0]
    n = base.shape[1]
    shift = (noise @ mixing.reshape(mixing.shape[0], -1)).reshape(m, n, n)
    return base + shift


def _softmax(log_w: np.ndarray) -> np.ndarray:
    shifted = np.exp(log_w - log_w.max())
    return shifted / shifted.sum()


# ---------------------------------------------------------------------------
# Linear family


@dataclass(frozen=True)
class RobustLpInstance:
    """Rows a_i, offsets b_i, and the shared noise-mixing map P."""

    rows: np.ndarray      # (m, n)
    offsets: np.ndarray   # (m,)
    mixing: np.ndarray    # (n, K): noise u_i shifts row i by (P u_i)

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=float)
        offsets = np.asarray(self.offsets, dtype=float)
        mixing = np.asarray(self.mixing, dtype=float)
        if rows.ndim != 2:
            raise ValueError(f"rows must be a matrix, got shape {rows.shape}")
        m, n = rows.shape
        if offsets.shape != (m,):
            raise ValueError(f"offsets shape {offsets.shape} does not match {m} rows")
        if mixing.ndim != 2 or mixing.shape[0] != n:
            raise ValueError(f"mixing shape {mixing.shape} incompatible with dimension {n}")
        for name, arr in (("rows", rows), ("offsets", offsets), ("mixing", mixing)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "mixing", mixing)

    @property
    def num_constraints(self) -> int:
        return self.rows.shape[0]

    @property
    def dimension(self) -> int:
        return self.rows.shape[1]

    @property
    def noise_dimension(self) -> int:
        return self.mixing.shape[1]

    @property
    def spectral_scale(self) -> float:
        """Frobenius norm of the mixing map; bounds every noise effect."""
        return float(np.linalg.norm(self.mixing, "fro"))

    def shifted_rows(self, noise: np.ndarray) -> np.ndarray:
        """Constraint normals a_i + P u_i for a full noise assignment."""
        return self.rows + noise @ self.mixing.T

    def constraint_value(self, index: int, x: np.ndarray, u: np.ndarray) -> float:
        row = self.rows[index] + self.mixing @ u
        return float(row @ x - self.offsets[index])


def lp_reward_vector(instance: RobustLpInstance, x: np.ndarray) -> np.ndarray:
    """Gradient of every constraint in its noise: P' x (same for all rows)."""
    return instance.mixing.T @ np.asarray(x, dtype=float)


def lp_feasibility_oracle(
    instance: RobustLpInstance,
    noise: np.ndarray,
    epsilon: float,
    budget: Optional[int] = None,
    start: Optional[np.ndarray] = None,
) -> OracleVerdict:
    """eps-feasibility for the linear family at a fixed noise assignment.

    Projected subgradient descent on ``v(x) = max_i ((a_i + P u_i) . x - b_i)``
    over the unit ball, returning the first point with ``v <= eps``.  Simplex
    weights lam ascend by multiplicative weights on the constraint values;
    whenever ``-||sum lam_i (a_i + P u_i)|| - lam . b > 0`` the nominal
    problem is empty and that certificate is returned.
    """
    noise = _check_noise(noise, instance.num_constraints, instance.noise_dimension)
    budget = _check_budget(budget, epsilon)
    shifted = instance.shifted_rows(noise)
    offsets = instance.offsets
    m = instance.num_constraints

    x = np.zeros(instance.dimension) if start is None else _project_unit_ball(
        np.asarray(start, dtype=float).copy()
    )
    values = shifted @ x - offsets
    if float(values.max()) <= epsilon:
        return Feasible(x, 0)

    row_norms = np.linalg.norm(shifted, axis=1)
    grad_bound = float(row_norms.max())
    value_scale = float((row_norms + np.abs(offsets)).max()) or 1.0
    dual_tol = _DUAL_TOL * max(1.0, value_scale)
    log_w = np.zeros(m)
    best_value = float(values.max())
    best_dual = -math.inf

    for t in range(1, budget + 1):
        weights = _softmax(log_w)
        dual = -float(np.linalg.norm(weights @ shifted)) - float(weights @ offsets)
        best_dual = max(best_dual, dual)
        if dual > dual_tol:
            return Infeasible(DualCertificate(weights, noise.copy(), dual, family="linear"))
        log_w += math.sqrt(math.log(max(m, 2)) / t) / value_scale * values
        log_w -= log_w.max()

        if grad_bound > 0:
            step = 2.0 / (grad_bound * math.sqrt(t))
            worst = int(np.argmax(values))
            x = _project_unit_ball(x - step * shifted[worst])
            values = shifted @ x - offsets
        current = float(values.max())
        best_value = min(best_value, current)
        if current <= epsilon:
            return Feasible(x, t)

    raise OracleBudgetError(
        f"no verdict within {budget} iterations (best value {best_value:.3e}, "
        f"best dual bound {best_dual:.3e})",
        diagnostics={"iterations": budget, "best_value": best_value, "best_dual": best_dual},
    )


# ---------------------------------------------------------------------------
# Quadratic family


@dataclass(frozen=True)
class RobustQpInstance:
    """Constraints ||(A_i + sum_k u_ik P_k) x||^2 <= b_i . x + c_i."""

    base: np.ndarray      # (m, n, n) A_i
    mixing: np.ndarray    # (K, n, n) P_k, shared by all constraints
    linear: np.ndarray    # (m, n) b_i
    offsets: np.ndarray   # (m,) c_i

    def __post_init__(self) -> None:
        base = np.asarray(self.base, dtype=float)
        mixing = np.asarray(self.mixing, dtype=float)
        linear = np.asarray(self.linear, dtype=float)
        offsets = np.asarray(self.offsets, dtype=float)
        if base.ndim != 3 or base.shape[1] != base.shape[2]:
            raise ValueError(f"base must be (m, n, n), got {base.shape}")
        m, n = base.shape[0], base.shape[1]
        if mixing.ndim != 3 or mixing.shape[1:] != (n, n):
            raise ValueError(f"mixing must be (K, {n}, {n}), got {mixing.shape}")
        if linear.shape != (m, n):
            raise ValueError(f"linear shape {linear.shape} does not match ({m}, {n})")
        if offsets.shape != (m,):
            raise ValueError(f"offsets shape {offsets.shape} does not match {m} constraints")
        for name, arr in (("base", base), ("mixing", mixing), ("linear", linear), ("offsets", offsets)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "mixing", mixing)
        object.__setattr__(self, "linear", linear)
        object.__setattr__(self, "offsets", offsets)

    @property
    def num_constraints(self) -> int:
        return self.base.shape[0]

    @property
    def dimension(self) -> int:
        return self.base.shape[1]

    @property
    def noise_dimension(self) -> int:
        return self.mixing.shape[0]

    @property
    def spectral_scale(self) -> float:
        """sqrt of the summed squared Frobenius norms of the mixing matrices."""
        return float(np.sqrt(np.sum(self.mixing * self.mixing)))

    @property
    def base_scale(self) -> float:
        """Largest Frobenius norm among the base matrices."""
        return float(np.sqrt(np.max(np.sum(self.base * self.base, axis=(1, 2)))))

    def noise_matrix(self, index: int, u: np.ndarray) -> np.ndarray:
        return self.base[index] + np.tensordot(u, self.mixing, axes=1)

    def constraint_value(self, index: int, x: np.ndarray, u: np.ndarray) -> float:
        bx = self.noise_matrix(index, u) @ x
        return float(bx @ bx - self.linear[index] @ x - self.offsets[index])


def quad_form_coefficients(
    instance: RobustQpInstance, index: int, x: np.ndarray
) -> tuple[np.ndarray, np.ndarray, float]:
    """Coefficients (Q, r, s) with f_index(x, u) = u'Qu + 2 r.u + s.

    Q collects the pairwise products of the mixed directions P_k x, r their
    alignment with the base direction A_index x, and s the noise-free part.
    Q is positive semidefinite with ||Q||_F bounded by the squared spectral
    scale, and ||r|| by spectral scale times base scale.
    """
    x = np.asarray(x, dtype=float)
    mixed = np.tensordot(instance.mixing, x, axes=([2], [0]))  # (K, n): rows P_k x
    y0 = instance.base[index] @ x
    q = mixed @ mixed.T
    r = mixed @ y0
    s = float(y0 @ y0 - instance.linear[index] @ x - instance.offsets[index])
    return q, r, s


def qp_noise_lift(noise_dimension: int, radius: float = 1.0) -> NoiseLift:
    """Lift u -> (vec(u u'), u) making the quadratic family linear in noise.

    Pessimization of a lifted reward vector is exactly a trust-region
    subproblem: the matrix block (symmetrized) is the quadratic term, half
    the vector block the linear term.
    """
    k = noise_dimension
    if radius != 1.0:
        raise ValueError("lifted pessimization is implemented for the unit ball only")

    def lift(u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return np.concatenate([np.outer(u, u).ravel(), u])

    def pessimize(w: np.ndarray, tol: float) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        quad = w[: k * k].reshape(k, k)
        lin = 0.5 * w[k * k:]
        return trs_max_on_ball(TrsProblem(quad, lin, tol)).point

    def lift_block(rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=float)
        outer = np.einsum("mi,mj->mij", rows, rows)
        return np.concatenate([outer.reshape(rows.shape[0], k * k), rows], axis=1)

    return NoiseLift(k * k + k, lift, pessimize, lift_block=lift_block)


def qcqp_feasibility_oracle(
    instance: RobustQpInstance,
    noise: np.ndarray,
    epsilon: float,
    budget: Optional[int] = None,
    start: Optional[np.ndarray] = None,
) -> OracleVerdict:
    """eps-feasibility for the quadratic family at a fixed noise assignment.

    With the noise frozen each constraint is a convex quadratic, so the
    subgradient of the max runs through 2 B_j' B_j x - b_j for the worst
    constraint j.  The weighted dual bound is itself a ball-constrained
    quadratic minimization, solved exactly by the trust-region routine.
    """
    noise = _check_noise(noise, instance.num_constraints, instance.noise_dimension)
    budget = _check_budget(budget, epsilon)
    m, n = instance.num_constraints, instance.dimension
    frozen = _frozen_matrices(instance.base, instance.mixing, noise)
    gram = np.einsum("mij,mik->mjk", frozen, frozen)  # B_i' B_i
    lin = instance.linear
    offs = instance.offsets

    frob = np.sqrt(np.sum(frozen * frozen, axis=(1, 2)))
    grad_bound = float((2.0 * frob**2 + np.linalg.norm(lin, axis=1)).max())
    value_scale = float((frob**2 + np.linalg.norm(lin, axis=1) + np.abs(offs)).max()) or 1.0
    dual_tol = _DUAL_TOL * max(1.0, value_scale)

    x = np.zeros(n) if start is None else _project_unit_ball(np.asarray(start, dtype=float).copy())

    def constraint_values(pt: np.ndarray) -> np.ndarray:
        return np.einsum("mij,i,j->m", gram, pt, pt) - lin @ pt - offs

    values = constraint_values(x)
    if float(values.max()) <= epsilon:
        return Feasible(x, 0)

    log_w = np.zeros(m)
    best_value = float(values.max())
    best_dual = -math.inf
    for t in range(1, budget + 1):
        weights = _softmax(log_w)
        quad = np.tensordot(weights, gram, axes=1)
        linear_part = weights @ lin
        dual = trs_min_on_ball(TrsProblem(quad, -0.5 * linear_part, 1e-12)).value
        dual -= float(weights @ offs)
        best_dual = max(best_dual, dual)
        if dual > dual_tol:
            return Infeasible(DualCertificate(weights, noise.copy(), dual, family="quadratic"))
        log_w += math.sqrt(math.log(max(m, 2)) / t) / value_scale * values
        log_w -= log_w.max()

        if grad_bound > 0:
            worst = int(np.argmax(values))
            step = 2.0 / (grad_bound * math.sqrt(t))
            x = _project_unit_ball(x - step * (2.0 * gram[worst] @ x - lin[worst]))
            values = constraint_values(x)
        current = float(values.max())
        best_value = min(best_value, current)
        if current <= epsilon:
            return Feasible(x, t)

    raise OracleBudgetError(
        f"no verdict within {budget} iterations (best value {best_value:.3e}, "
        f"best dual bound {best_dual:.3e})",
        diagnostics={"iterations": budget, "best_value": best_value, "best_dual": best_dual},
    )


# ---------------------------------------------------------------------------
# Semidefinite family


@dataclass(frozen=True)
class RobustSdpInstance:
    """Constraints (A_i + sum_k u_ik P_k) . X <= b_i over the PSD Frobenius ball."""

    base: np.ndarray      # (m, n, n) symmetric A_i
    mixing: np.ndarray    # (K, n, n) symmetric P_k
    offsets: np.ndarray   # (m,)

    def __post_init__(self) -> None:
        base = np.asarray(self.base, dtype=float)
        mixing = np.asarray(self.mixing, dtype=float)
        offsets = np.asarray(self.offsets, dtype=float)
        if base.ndim != 3 or base.shape[1] != base.shape[2]:
            raise ValueError(f"base must be (m, n, n), got {base.shape}")
        n = base.shape[1]
        if mixing.ndim != 3 or mixing.shape[1:] != (n, n):
            raise ValueError(f"mixing must be (K, {n}, {n}), got {mixing.shape}")
        if offsets.shape != (base.shape[0],):
            raise ValueError(f"offsets shape {offsets.shape} mismatched")
        for name, arr in (("base", base), ("mixing", mixing)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries")
            if not np.allclose(arr, np.swapaxes(arr, -1, -2), atol=1e-8):
                raise ValueError(f"{name} matrices must be symmetric")
        if not np.all(np.isfinite(offsets)):
            raise ValueError("offsets has non-finite entries")
        object.__setattr__(self, "base", 0.5 * (base + np.swapaxes(base, -1, -2)))
        object.__setattr__(self, "mixing", 0.5 * (mixing + np.swapaxes(mixing, -1, -2)))
        object.__setattr__(self, "offsets", offsets)

    @property
    def num_constraints(self) -> int:
        return self.base.shape[0]

    @property
    def dimension(self) -> int:
        return self.base.shape[1]

    @property
    def noise_dimension(self) -> int:
        return self.mixing.shape[0]

    @property
    def spectral_scale(self) -> float:
        return float(np.sqrt(np.sum(self.mixing * self.mixing)))

    def noise_matrix(self, index: int, u: np.ndarray) -> np.ndarray:
        return self.base[index] + np.tensordot(u, self.mixing, axes=1)

    def constraint_value(self, index: int, decision: np.ndarray, u: np.ndarray) -> float:
        return float(np.sum(self.noise_matrix(index, u) * decision) - self.offsets[index])


def sdp_noise_gradient(instance: RobustSdpInstance, decision: np.ndarray) -> np.ndarray:
    """Gradient of every constraint in its noise: the vector (P_k . X)_k."""
    return np.tensordot(instance.mixing, np.asarray(decision, dtype=float), axes=([1, 2], [0, 1]))


def psd_frobenius_projection(matrix: np.ndarray) -> np.ndarray:
    """Nearest PSD matrix inside the Frobenius unit ball.

    Symmetrize, clamp negative eigenvalues, then radially rescale: exact
    because the PSD cone is a cone, so projecting onto it and truncating
    the radius commute.
    """
    matrix = np.asarray(matrix, dtype=float)
    sym = 0.5 * (matrix + matrix.T)
    eigvals, eigvecs = np.linalg.eigh(sym)
    clamped = np.maximum(eigvals, 0.0)
    norm = float(np.linalg.norm(clamped))
    if norm > 1.0:
        clamped = clamped / norm
    return (eigvecs * clamped) @ eigvecs.T


def sdp_feasibility_oracle(
    instance: RobustSdpInstance,
    noise: np.ndarray,
    epsilon: float,
    budget: Optional[int] = None,
    start: Optional[np.ndarray] = None,
) -> OracleVerdict:
    """eps-feasibility for the semidefinite family at a fixed noise assignment.

    The constraints are linear in X, so descent steps move against the
    worst frozen matrix and project back onto the PSD Frobenius ball.  The
    weighted dual bound is the exact minimum of (sum lam_i B_i) . X over
    that domain: the negative eigenvalues of the combination, clipped to
    the ball, i.e. minus their Euclidean norm.
    """
    noise = _check_noise(noise, instance.num_constraints, instance.noise_dimension)
    budget = _check_budget(budget, epsilon)
    frozen = _frozen_matrices(instance.base, instance.mixing, noise)
    m, n = instance.num_constraints, instance.dimension
    offs = instance.offsets

    frob = np.sqrt(np.sum(frozen * frozen, axis=(1, 2)))
    grad_bound = float(frob.max())
    value_scale = float((frob + np.abs(offs)).max()) or 1.0
    dual_tol = _DUAL_TOL * max(1.0, value_scale)

    decision = (
        np.zeros((n, n))
        if start is None
        else psd_frobenius_projection(np.asarray(start, dtype=float))
    )
    values = np.einsum("mij,ij->m", frozen, decision) - offs
    if float(values.max()) <= epsilon:
        return Feasible(decision, 0)

    log_w = np.zeros(m)
    best_value = float(values.max())
    best_dual = -math.inf
    for t in range(1, budget + 1):
        weights = _softmax(log_w)
        combo = np.tensordot(weights, frozen, axes=1)
        negative = np.minimum(np.linalg.eigvalsh(combo), 0.0)
        dual = -float(np.linalg.norm(negative)) - float(weights @ offs)
        best_dual = max(best_dual, dual)
        if dual > dual_tol:
            return Infeasible(DualCertificate(weights, noise.copy(), dual, family="semidefinite"))
        log_w += math.sqrt(math.log(max(m, 2)) / t) / value_scale * values
        log_w -= log_w.max()

        if grad_bound > 0:
            worst = int(np.argmax(values))
            step = 2.0 / (grad_bound * math.sqrt(t))
            decision = psd_frobenius_projection(decision - step * frozen[worst])
            values = np.einsum("mij,ij->m", frozen, decision) - offs
        current = float(values.max())
        best_value = min(best_value, current)
        if current <= epsilon:
            return Feasible(decision, t)

    raise OracleBudgetError(
        f"no verdict within {budget} iterations (best value {best_value:.3e}, "
        f"best dual bound {best_dual:.3e})",
        diagnostics={"iterations": budget, "best_value": best_value, "best_dual": best_dual},
    )


def _check_noise(noise: np.ndarray, m: int, k: int) -> np.ndarray:
    noise = np.asarray(noise, dtype=float)
    if noise.shape != (m, k):
        raise ValueError(f"noise must have shape ({m}, {k}), got {noise.shape}")
    if not np.all(np.isfinite(noise)):
        raise ValueError("noise has non-finite entries")
    norms = np.linalg.norm(noise, axis=1)
    if float(norms.max(initial=0.0)) > 1.0 + 1e-6:
        raise ValueError("noise assignment leaves the unit ball")
    return noise


def _check_budget(budget: Optional[int], epsilon: float) -> int:
    if budget is None:
        return default_budget(epsilon)
    if budget < 1:
        raise ValueError(f"budget must be at least 1, got {budget}")
    return int(budget)


# ---------------------------------------------------------------------------
# Problem builders: wire instances into the solver-facing representation


class _PerDecisionCache:
    """Memoize a decision-dependent quantity shared by all constraints.

    Identity-based: the solvers hold each decision fixed while they sweep
    the constraints, which is exactly the reuse window this exploits.
    """

    def __init__(self, compute):
        self._compute = compute
        self._key: Optional[np.ndarray] = None
        self._value = None

    def __call__(self, x: np.ndarray):
        if x is not self._key:
            self._key = x
            self._value = self._compute(x)
        return self._value


AnyInstance = Union[RobustLpInstance, RobustQpInstance, RobustSdpInstance]


def lp_problem(instance: RobustLpInstance) -> RobustFeasibilityProblem:
    """Solver-facing form of a linear instance with its closed-form constants."""
    k = instance.noise_dimension
    sigma = max(instance.spectral_scale, _SCALE_FLOOR)
    ball = BallSet(k)
    shared_reward = _PerDecisionCache(lambda x: instance.mixing.T @ x)

    def make_constraint(i: int) -> ConstraintSpec:
        return ConstraintSpec(
            evaluate=lambda x, u, i=i: instance.constraint_value(i, x, u),
            noise_gradient=lambda x, u: shared_reward(x),
            linear_decomposition=lambda x, i=i: (
                shared_reward(x),
                float(instance.rows[i] @ x - instance.offsets[i]),
            ),
        )

    m = instance.num_constraints

    def nominal(x: np.ndarray) -> np.ndarray:
        return instance.rows @ x - instance.offsets

    return RobustFeasibilityProblem(
        constraints=tuple(make_constraint(i) for i in range(m)),
        noise_set=ball,
        subgradient=SubgradientConstants(2.0, sigma),
        perturbation=PerturbationConstants(
            2.0 * math.sqrt(k), math.sqrt(k) * sigma, sigma
        ),
        noise_lift=identity_lift(ball),
        evaluate_block=lambda x, noise: nominal(x) + noise @ shared_reward(x),
        noise_gradient_block=lambda x, noise: np.broadcast_to(shared_reward(x), (m, k)),
        linear_decomposition_block=lambda x: (
            np.broadcast_to(shared_reward(x), (m, k)),
            nominal(x),
        ),
    )


def qp_problem(instance: RobustQpInstance) -> RobustFeasibilityProblem:
    """Solver-facing form of a quadratic instance (perturbed-leader only).

    The constraints are convex, not concave, in their noise, so gradient
    ascent carries no guarantee here and no ascent constants are attached.
    """
    k = instance.noise_dimension
    sigma = max(instance.spectral_scale, _SCALE_FLOOR)
    rho = instance.base_scale
    shared_mixed = _PerDecisionCache(
        lambda x: np.tensordot(instance.mixing, x, axes=([2], [0]))
    )

    def lifted_reward(i: int, x: np.ndarray) -> tuple[np.ndarray, float]:
        mixed = shared_mixed(x)
        y0 = instance.base[i] @ x
        quad = mixed @ mixed.T
        r = mixed @ y0
        s = float(y0 @ y0 - instance.linear[i] @ x - instance.offsets[i])
        return np.concatenate([quad.ravel(), 2.0 * r]), s

    def make_constraint(i: int) -> ConstraintSpec:
        return ConstraintSpec(
            evaluate=lambda x, u, i=i: instance.constraint_value(i, x, u),
            linear_decomposition=lambda x, i=i: lifted_reward(i, x),
        )

    m = instance.num_constraints

    def decomposition_block(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        mixed = shared_mixed(x)
        y0 = np.einsum("mij,j->mi", instance.base, x)
        quad = (mixed @ mixed.T).ravel()
        r = y0 @ mixed.T
        g = np.concatenate([np.broadcast_to(quad, (m, k * k)), 2.0 * r], axis=1)
        h = np.einsum("mi,mi->m", y0, y0) - instance.linear @ x - instance.offsets
        return g, h

    def evaluate_block(x: np.ndarray, noise: np.ndarray) -> np.ndarray:
        mixed = shared_mixed(x)
        y = np.einsum("mij,j->mi", instance.base, x) + noise @ mixed
        return np.einsum("mi,mi->m", y, y) - instance.linear @ x - instance.offsets

    return RobustFeasibilityProblem(
        constraints=tuple(make_constraint(i) for i in range(m)),
        noise_set=BallSet(k),
        perturbation=PerturbationConstants(
            8.0 * k,
            2.0 * k * (sigma**2 + 2.0 * sigma * rho),
            2.0 * sigma**2 + 4.0 * sigma * rho,
        ),
        noise_lift=qp_noise_lift(k),
        evaluate_block=evaluate_block,
        linear_decomposition_block=decomposition_block,
    )


def sdp_problem(instance: RobustSdpInstance) -> RobustFeasibilityProblem:
    """Solver-facing form of a semidefinite instance.

    Linear in the noise just like the linear family, so both solvers
    apply; the decision variable is the matrix itself.
    """
    k = instance.noise_dimension
    sigma = max(instance.spectral_scale, _SCALE_FLOOR)
    ball = BallSet(k)
    shared_reward = _PerDecisionCache(lambda x: sdp_noise_gradient(instance, x))

    def make_constraint(i: int) -> ConstraintSpec:
        return ConstraintSpec(
            evaluate=lambda x, u, i=i: instance.constraint_value(i, x, u),
            noise_gradient=lambda x, u: shared_reward(x),
            linear_decomposition=lambda x, i=i: (
                shared_reward(x),
                float(np.sum(instance.base[i] * x) - instance.offsets[i]),
            ),
        )

    m = instance.num_constraints

    def nominal(x: np.ndarray) -> np.ndarray:
        return np.einsum("mij,ij->m", instance.base, x) - instance.offsets

    return RobustFeasibilityProblem(
        constraints=tuple(make_constraint(i) for i in range(m)),
        noise_set=ball,
        subgradient=SubgradientConstants(2.0, sigma),
        perturbation=PerturbationConstants(
            2.0 * math.sqrt(k), math.sqrt(k) * sigma, sigma
        ),
        noise_lift=identity_lift(ball),
        evaluate_block=lambda x, noise: nominal(x) + noise @ shared_reward(x),
        noise_gradient_block=lambda x, noise: np.broadcast_to(shared_reward(x), (m, k)),
        linear_decomposition_block=lambda x: (
            np.broadcast_to(shared_reward(x), (m, k)),
            nominal(x),
        ),
    )


def build_problem(instance: AnyInstance) -> RobustFeasibilityProblem:
    if isinstance(instance, RobustLpInstance):
        return lp_problem(instance)
    if isinstance(instance, RobustQpInstance):
        return qp_problem(instance)
    if isinstance(instance, RobustSdpInstance):
        return sdp_problem(instance)
    raise TypeError(f"unsupported instance type {type(instance).__name__}")


def oracle_for(instance: AnyInstance, epsilon: float, budget: Optional[int] = None):
    """Bind an instance to its family oracle as a (noise, start) callable."""
    if isinstance(instance, RobustLpInstance):
        inner = lp_feasibility_oracle
    elif isinstance(instance, RobustQpInstance):
        inner = qcqp_feasibility_oracle
    elif isinstance(instance, RobustSdpInstance):
        inner = sdp_feasibility_oracle
    else:
        raise TypeError(f"unsupported instance type {type(instance).__name__}")

    def oracle(noise: np.ndarray, start: Optional[np.ndarray]) -> OracleVerdict:
        return inner(instance, noise, epsilon, budget=budget, start=start)

    return oracle


def recompute_certificate(instance: AnyInstance, certificate: DualCertificate) -> float:
    """Re-derive a certificate's dual bound from scratch.

    Validates the weights, rebuilds the frozen constraints at the recorded
    noise, and evaluates the Lagrangian lower bound with the family's
    closed form.  Strictly positive means the nominal problem really is
    empty at that noise.
    """
    weights = np.asarray(certificate.weights, dtype=float)
    if weights.ndim != 1 or weights.shape[0] != instance.num_constraints:
        raise ValueError("certificate weights do not match the instance")
    if np.any(weights < -1e-12) or abs(float(weights.sum()) - 1.0) > 1e-6:
        raise ValueError("certificate weights are not a simplex point")
    noise = _check_noise(
        certificate.noise, instance.num_constraints, instance.noise_dimension
    )
    if isinstance(instance, RobustLpInstance):
        shifted = instance.shifted_rows(noise)
        return -float(np.linalg.norm(weights @ shifted)) - float(weights @ instance.offsets)
    if isinstance(instance, RobustQpInstance):
        frozen = _frozen_matrices(instance.base, instance.mixing, noise)
        gram = np.einsum("mij,mik->mjk", frozen, frozen)
        quad = np.tensordot(weights, gram, axes=1)
        linear_part = weights @ instance.linear
        value = trs_min_on_ball(TrsProblem(quad, -0.5 * linear_part, 1e-12)).value
        return value - float(weights @ instance.offsets)
    if isinstance(instance, RobustSdpInstance):
        frozen = _frozen_matrices(instance.base, instance.mixing, noise)
        combo = np.tensordot(weights, frozen, axes=1)
        negative = np.minimum(np.linalg.eigvalsh(combo), 0.0)
        return -float(np.linalg.norm(negative)) - float(weights @ instance.offsets)
    raise TypeError(f"unsupported instance type {type(instance).__name__}")


# ---------------------------------------------------------------------------
# Seeded instance generators (feasible by construction unless stated)


def generate_lp(
    dimension: int,
    num_constraints: int,
    noise_dimension: int,
    sigma: float = 1.0,
    margin: float = 0.3,
    seed: int = 0,
) -> RobustLpInstance:
    """Random linear instance, feasible by construction.

    Draws unit-norm constraint rows and a mixing map of Frobenius norm
    ``sigma``, then backs the offsets off so that a hidden point satisfies
    every constraint with worst-case slack ``margin``.  The first row
    opposes the hidden point, which typically leaves the origin outside
    the robust region so solvers cannot succeed vacuously.
    """
    if margin <= 0:
        raise ValueError(f"margin must be positive, got {margin}")
    rng = np.random.default_rng(seed)
    rows = rng.standard_normal((num_constraints, dimension))
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    mixing = _scaled_matrix(rng, (dimension, noise_dimension), sigma)
    anchor = _interior_point(rng, dimension, depth=0.7)
    rows[0] = -anchor / 0.7
    worst = rows @ anchor + float(np.linalg.norm(mixing.T @ anchor))
    return RobustLpInstance(rows, worst + margin, mixing)


def generate_infeasible_lp(
    dimension: int,
    num_constraints: int,
    noise_dimension: int,
    sigma: float = 1.0,
    gap: Optional[float] = None,
    seed: int = 0,
) -> RobustLpInstance:
    """Linear instance that is empty at every admissible noise.

    Plants an irreconcilable pair of opposed half-spaces whose combined
    slack stays negative even after the largest possible noise shift;
    remaining rows are benign.  The uniform weights on the pair certify
    emptiness with bound at least ``gap/2 - sigma``.
    """
    if num_constraints < 2:
        raise ValueError("need at least two constraints to plant a contradiction")
    rng = np.random.default_rng(seed)
    if gap is None:
        gap = 2.0 * sigma + 1.0
    if gap <= 2.0 * sigma:
        raise ValueError(f"gap {gap} cannot beat the worst noise shift {2.0 * sigma}")
    direction = rng.standard_normal(dimension)
    direction /= np.linalg.norm(direction)
    rows = rng.standard_normal((num_constraints, dimension))
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    rows[0] = direction
    rows[1] = -direction
    offsets = np.abs(rng.standard_normal(num_constraints)) + sigma + 1.0
    offsets[0] = offsets[1] = -0.5 * gap
    mixing = _scaled_matrix(rng, (dimension, noise_dimension), sigma)
    return RobustLpInstance(rows, offsets, mixing)


def generate_qp(
    dimension: int,
    num_constraints: int,
    noise_dimension: int,
    sigma: float = 0.25,
    margin: float = 0.3,
    seed: int = 0,
) -> RobustQpInstance:
    """Random quadratic instance, feasible by construction.

    Base matrices have unit Frobenius norm; the offsets absorb the exact
    worst case at a hidden interior point (computed by the trust-region
    routine) plus ``margin``.
    """
    if margin <= 0:
        raise ValueError(f"margin must be positive, got {margin}")
    rng = np.random.default_rng(seed)
    base = rng.standard_normal((num_constraints, dimension, dimension))
    base /= np.sqrt(np.sum(base * base, axis=(1, 2)))[:, None, None]
    mixing = rng.standard_normal((noise_dimension, dimension, dimension))
    total = float(np.sqrt(np.sum(mixing * mixing)))
    mixing *= (sigma / total) if total > 0 and sigma > 0 else 0.0
    linear = 0.3 * rng.standard_normal((num_constraints, dimension))
    anchor = _interior_point(rng, dimension, depth=0.7)

    probe = RobustQpInstance(base, mixing, linear, np.zeros(num_constraints))
    worsts = np.empty(num_constraints)
    for i in range(num_constraints):
        quad, r, s = quad_form_coefficients(probe, i, anchor)
        worsts[i] = trs_max_on_ball(TrsProblem(quad, r, 1e-12)).value + s
    offsets = worsts + margin
    # Tilt one linear term toward the hidden point so the origin violates
    # that constraint by exactly 0.5; the hidden point's margin is intact.
    tilt = (worsts[0] + margin + 0.5) / float(anchor @ anchor)
    linear[0] += tilt * anchor
    offsets[0] = -0.5
    return RobustQpInstance(base, mixing, linear, offsets)


def generate_sdp(
    dimension: int,
    num_constraints: int,
    noise_dimension: int,
    sigma: float = 0.75,
    margin: float = 0.3,
    seed: int = 0,
) -> RobustSdpInstance:
    """Random semidefinite instance, feasible by construction."""
    if margin <= 0:
        raise ValueError(f"margin must be positive, got {margin}")
    rng = np.random.default_rng(seed)
    base = rng.standard_normal((num_constraints, dimension, dimension))
    base = 0.5 * (base + np.swapaxes(base, -1, -2))
    base /= np.sqrt(np.sum(base * base, axis=(1, 2)))[:, None, None]
    mixing = rng.standard_normal((noise_dimension, dimension, dimension))
    mixing = 0.5 * (mixing + np.swapaxes(mixing, -1, -2))
    total = float(np.sqrt(np.sum(mixing * mixing)))
    mixing *= (sigma / total) if total > 0 and sigma > 0 else 0.0

    factor = rng.standard_normal((dimension, dimension))
    anchor = factor @ factor.T
    anchor *= 0.7 / float(np.linalg.norm(anchor, "fro"))
    # First constraint opposes the hidden point: a decision must align with
    # the anchor to satisfy it, which typically rules out the zero matrix.
    base[0] = -anchor / 0.7

    noise_terms = np.tensordot(mixing, anchor, axes=([1, 2], [0, 1]))
    worst = np.einsum("mij,ij->m", base, anchor) + float(np.linalg.norm(noise_terms))
    return RobustSdpInstance(base, mixing, worst + margin)


def generate_instance(
    family: str,
    dimension: int,
    num_constraints: int,
    noise_dimension: int,
    sigma: float,
    seed: int,
    margin: float = 0.3,
    feasible: bool = True,
) -> AnyInstance:
    """Family-dispatching generator used by the command-line interface."""
    if family == "linear":
        if feasible:
            return generate_lp(dimension, num_constraints, noise_dimension, sigma, margin, seed)
        return generate_infeasible_lp(dimension, num_constraints, noise_dimension, sigma, seed=seed)
    if not feasible:
        raise ValueError("infeasible construction is only available for the linear family")
    if family == "quadratic":
        return generate_qp(dimension, num_constraints, noise_dimension, sigma, margin, seed)
    if family == "semidefinite":
        return generate_sdp(dimension, num_constraints, noise_dimension, sigma, margin, seed)
    raise ValueError(f"unknown family {family!r}")


def _scaled_matrix(rng: np.random.Generator, shape: tuple[int, int], norm: float) -> np.ndarray:
    matrix = rng.standard_normal(shape)
    total = float(np.linalg.norm(matrix, "fro"))
    if norm <= 0 or total == 0:
        return np.zeros(shape)
    return matrix * (norm / total)


def _interior_point(rng: np.random.Generator, dimension: int, depth: float = 0.4) -> np.ndarray:
    point = rng.standard_normal(dimension)
    return point * (depth / float(np.linalg.norm(point)))
