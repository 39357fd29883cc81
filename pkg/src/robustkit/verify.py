"""Worst-case certification of candidate decisions.

Everything here recomputes constraint violations from the instance data
alone, sharing nothing with the solver loops, so a solver bug cannot
certify itself.  The linear and semidefinite families have closed-form
worst cases (the noise aligns with the constraint's reward vector); the
quadratic family reduces to a trust-region subproblem per constraint.
Sphere sampling is available as a generic fallback and reports itself as
a lower bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .robust_core import RobustFeasibilityProblem
from .trustregion import TrsProblem, trs_max_on_ball
from .oracles import (
    RobustLpInstance,
    RobustQpInstance,
    RobustSdpInstance,
    quad_form_coefficients,
    sdp_noise_gradient,
)

__all__ = [
    "RobustnessCertificate",
    "worst_case_violation_lp",
    "worst_case_violation_qp",
    "worst_case_violation_sdp",
    "worst_case_violation_sampled",
    "worst_case_violation",
    "check_epsilon_robust",
]


@dataclass
class RobustnessCertificate:
    """Per-constraint worst-case violations and the noise achieving them.

    ``tolerance`` is the additive amount by which the reported values may
    undershoot the true worst case (zero for closed forms).  Sampled
    certificates set ``lower_bound_only`` since no sampling density was
    accounted for.
    """

    violations: np.ndarray
    maximizers: np.ndarray
    method: str
    tolerance: float = 0.0
    lower_bound_only: bool = False
    samples: int = 0

    @property
    def max_violation(self) -> float:
        return float(self.violations.max())


def worst_case_violation_lp(instance: RobustLpInstance, x: np.ndarray) -> RobustnessCertificate:
    """Exact worst case of each linear constraint at ``x``.

    The noise enters as ``(P u) . x = u . (P' x)``, maximized on the ball
    by the unit vector along P'x, so the worst value is
    ``a_i . x - b_i + ||P' x||`` for every constraint simultaneously.
    """
    x = np.asarray(x, dtype=float)
    reward = instance.mixing.T @ x
    reward_norm = float(np.linalg.norm(reward))
    violations = instance.rows @ x - instance.offsets + reward_norm
    direction = reward / reward_norm if reward_norm > 0 else np.zeros_like(reward)
    maximizers = np.tile(direction, (instance.num_constraints, 1))
    return RobustnessCertificate(violations, maximizers, method="closed-form")


def worst_case_violation_qp(
    instance: RobustQpInstance, x: np.ndarray, tolerance: float = 1e-9
) -> RobustnessCertificate:
    """Worst case of each quadratic constraint at ``x``, exact up to ``tolerance``.

    Each constraint's noise dependence is the quadratic form produced by
    ``quad_form_coefficients``; its ball maximum is a trust-region
    subproblem solved globally.
    """
    x = np.asarray(x, dtype=float)
    m = instance.num_constraints
    violations = np.empty(m)
    maximizers = np.empty((m, instance.noise_dimension))
    for i in range(m):
        quad, r, s = quad_form_coefficients(instance, i, x)
        solution = trs_max_on_ball(TrsProblem(quad, r, tolerance))
        violations[i] = solution.value + s
        maximizers[i] = solution.point
    return RobustnessCertificate(violations, maximizers, method="trust-region", tolerance=tolerance)


def worst_case_violation_sdp(
    instance: RobustSdpInstance, decision: np.ndarray
) -> RobustnessCertificate:
    """Exact worst case of each semidefinite constraint at ``decision``."""
    decision = np.asarray(decision, dtype=float)
    reward = sdp_noise_gradient(instance, decision)
    reward_norm = float(np.linalg.norm(reward))
    base_vals = np.einsum("mij,ij->m", instance.base, decision)
    violations = base_vals - instance.offsets + reward_norm
    direction = reward / reward_norm if reward_norm > 0 else np.zeros_like(reward)
    maximizers = np.tile(direction, (instance.num_constraints, 1))
    return RobustnessCertificate(violations, maximizers, method="closed-form")


def worst_case_violation_sampled(
    problem: RobustFeasibilityProblem,
    x: np.ndarray,
    samples: int = 1000,
    seed: int = 0,
) -> RobustnessCertificate:
    """Sampling fallback for problems without a specialized verifier.

    Evaluates each constraint at the set's center, at boundary samples,
    and at scaled interior copies; the reported values only ever
    underestimate the true worst case.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    if problem.num_constraints < 1:
        raise ValueError("problem has no constraints")
    rng = np.random.default_rng(seed)
    noise_set = problem.noise_set
    m = problem.num_constraints
    candidates = [np.zeros(noise_set.dimension)]
    for j in range(samples):
        point = noise_set.sample_boundary(rng)
        if j % 5 == 4:  # sprinkle interior points among the boundary ones
            point = point * rng.uniform(0.0, 1.0)
        candidates.append(point)
    violations = np.full(m, -np.inf)
    maximizers = np.zeros((m, noise_set.dimension))
    for i, constraint in enumerate(problem.constraints):
        for u in candidates:
            value = float(constraint.evaluate(x, u))
            if value > violations[i]:
                violations[i] = value
                maximizers[i] = u
    return RobustnessCertificate(
        violations,
        maximizers,
        method="sampled",
        lower_bound_only=True,
        samples=len(candidates),
    )


def worst_case_violation(instance, x: np.ndarray, tolerance: float = 1e-9) -> RobustnessCertificate:
    """Family-dispatching worst-case computation."""
    if isinstance(instance, RobustLpInstance):
        return worst_case_violation_lp(instance, x)
    if isinstance(instance, RobustQpInstance):
        return worst_case_violation_qp(instance, x, tolerance)
    if isinstance(instance, RobustSdpInstance):
        return worst_case_violation_sdp(instance, x)
    raise TypeError(f"unsupported instance type {type(instance).__name__}")


def check_epsilon_robust(
    certificate: RobustnessCertificate, threshold: float
) -> tuple[bool, dict]:
    """Compare certified violations against a threshold.

    Returns the verdict plus a report naming each offending constraint
    and its margin; the report also carries the certification method so
    downstream consumers can tell closed forms from sampled lower bounds.
    """
    if not math.isfinite(threshold):
        raise ValueError(f"threshold must be finite, got {threshold}")
    if certificate.violations.size == 0:
        raise ValueError("certificate covers no constraints")
    offending = [
        {"constraint": int(i), "violation": float(v), "excess": float(v - threshold)}
        for i, v in enumerate(certificate.violations)
        if v > threshold
    ]
    report = {
        "threshold": float(threshold),
        "max_violation": certificate.max_violation,
        "method": certificate.method,
        "tolerance": float(certificate.tolerance),
        "lower_bound_only": certificate.lower_bound_only,
        "offending": offending,
    }
    return len(offending) == 0, report
