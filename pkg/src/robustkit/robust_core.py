"""Reduction of robust feasibility to repeated nominal feasibility calls.

A robust feasibility problem asks for a decision x satisfying
``f_i(x, u_i) <= 0`` for every constraint i and every admissible noise
``u_i``.  The solvers here never touch the robust problem directly.
They maintain one online learner per constraint that adapts the noise
adversarially, and repeatedly call a user-supplied nominal oracle that,
for a fixed noise assignment, either returns an eps-feasible decision or
soundly certifies that none exists:

* ``dual_subgradient_solve`` drives the noise by projected gradient
  ascent (usable when each f_i is concave in its noise) and returns a
  decision whose worst-case violation is at most 2 eps;
* ``dual_perturbation_solve`` drives the noise by follow-the-perturbed-
  leader over a (possibly lifted) linear reward representation
  ``f_i(x, u) = g_i(x) . lift(u) + h_i(x)`` and returns a decision whose
  worst-case violation is at most 4 eps with probability >= 1 - delta.

Both return the average of the oracle's iterates.  Infeasibility is only
ever reported by forwarding the oracle's dual certificate, never by
exhausting iterations.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .learners import perturbation_block, split_key
from .uncertainty import BallSet, UncertaintySet

__all__ = [
    "ConstraintSpec",
    "NoiseLift",
    "identity_lift",
    "SubgradientConstants",
    "PerturbationConstants",
    "estimate_constants",
    "RobustFeasibilityProblem",
    "Feasible",
    "Infeasible",
    "DualCertificate",
    "OracleBudgetError",
    "BracketError",
    "RunReport",
    "Solved",
    "CertifiedInfeasible",
    "subgradient_rounds",
    "perturbation_rounds",
    "average_iterates",
    "dual_subgradient_solve",
    "dual_perturbation_solve",
    "with_level_constraint",
    "robust_minimize_bisection",
    "BisectionResult",
]


@dataclass(frozen=True)
class ConstraintSpec:
    """One robustly-held constraint ``f(x, u) <= 0``.

    ``evaluate`` is mandatory.  ``noise_gradient`` (the gradient of f in
    u at fixed x) enables the subgradient solver; ``linear_decomposition``
    maps x to ``(g, h)`` with ``f(x, u) = g . lift(u) + h`` over the lifted
    noise representation and enables the perturbation solver.
    """

    evaluate: Callable[[np.ndarray, np.ndarray], float]
    noise_gradient: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    linear_decomposition: Optional[Callable[[np.ndarray], tuple[np.ndarray, float]]] = None


@dataclass(frozen=True)
class NoiseLift:
    """Embedding of the noise set that makes the constraints linear.

    ``pessimize(w, tol)`` returns a noise point u in the original set whose
    lifted image maximizes ``w . lift(u)`` up to an additive ``tol``.
    ``pessimize_block`` optionally vectorizes that over the rows of a
    matrix of reward vectors.
    """

    dimension: int
    lift: Callable[[np.ndarray], np.ndarray]
    pessimize: Callable[[np.ndarray, float], np.ndarray]
    pessimize_block: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    lift_block: Optional[Callable[[np.ndarray], np.ndarray]] = None


def identity_lift(noise_set: UncertaintySet) -> NoiseLift:
    """Trivial lift for constraints already linear in their noise."""

    def pessimize(w: np.ndarray, tol: float) -> np.ndarray:
        return noise_set.linear_max(w)

    pessimize_block = None
    if isinstance(noise_set, BallSet):
        radius = noise_set.radius

        def pessimize_block(block: np.ndarray, tol: float) -> np.ndarray:
            norms = np.linalg.norm(block, axis=1, keepdims=True)
            scale = np.where(norms > 0.0, radius / np.where(norms > 0.0, norms, 1.0), 0.0)
            return block * scale

    return NoiseLift(
        noise_set.dimension,
        lambda u: u,
        pessimize,
        pessimize_block,
        lift_block=lambda rows: rows,
    )


@dataclass(frozen=True)
class SubgradientConstants:
    """Constants of the gradient-ascent noise updates.

    ``diameter`` is the l2 diameter of the noise set, ``gradient_bound``
    dominates ``||grad_u f_i(x, u)||_2`` over the domain, the noise set,
    and all constraints.
    """

    diameter: float
    gradient_bound: float
    estimated: bool = False

    def __post_init__(self) -> None:
        if not (self.diameter > 0 and math.isfinite(self.diameter)):
            raise ValueError(f"diameter must be positive and finite, got {self.diameter}")
        if not (self.gradient_bound >= 0 and math.isfinite(self.gradient_bound)):
            raise ValueError(f"gradient bound must be nonnegative, got {self.gradient_bound}")


@dataclass(frozen=True)
class PerturbationConstants:
    """Constants of the perturbed-leader noise updates, over the lifted set.

    ``diameter`` is the l1 diameter of the lifted noise set,
    ``reward_bound`` dominates ``||g_i(x)||_1``, and ``value_bound``
    dominates ``|g_i(x) . lift(u)|``.
    """

    diameter: float
    reward_bound: float
    value_bound: float
    estimated: bool = False

    def __post_init__(self) -> None:
        for name in ("diameter", "reward_bound", "value_bound"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v}")


@dataclass(frozen=True)
class RobustFeasibilityProblem:
    """Constraints, shared noise set, and the solver constants.

    Every constraint owns an identical copy of the noise set; the
    ``noise_set_for`` accessor still takes the constraint index so that
    heterogeneous sets can be added without changing call sites.

    The ``*_block`` closures are optional vectorized counterparts of the
    per-constraint callables (rows indexed by constraint).  Solvers fall
    back to the per-constraint path when they are absent; families that
    supply them must keep the two paths numerically interchangeable.
    """

    constraints: tuple[ConstraintSpec, ...]
    noise_set: UncertaintySet
    subgradient: Optional[SubgradientConstants] = None
    perturbation: Optional[PerturbationConstants] = None
    noise_lift: Optional[NoiseLift] = None
    evaluate_block: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    noise_gradient_block: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    linear_decomposition_block: Optional[
        Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]
    ] = None

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def noise_set_for(self, index: int) -> UncertaintySet:
        if not 0 <= index < len(self.constraints):
            raise IndexError(f"constraint index {index} out of range")
        return self.noise_set


def estimate_constants(
    constraints: Sequence[ConstraintSpec],
    noise_set: UncertaintySet,
    decision_sampler: Callable[[np.random.Generator], np.ndarray],
    rng: np.random.Generator,
    samples: int = 256,
    lift: Optional[NoiseLift] = None,
) -> tuple[Optional[SubgradientConstants], Optional[PerturbationConstants]]:
    """Sample-based constants for problems that do not supply closed forms.

    Draws decision/noise pairs, measures the relevant suprema, and inflates
    by 10% as a hedge against under-sampling; results carry
    ``estimated=True`` so reports can flag them.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    lift = lift or identity_lift(noise_set)
    grad_max = 0.0
    reward_max = 0.0
    value_max = 0.0
    lifted_norm_max = 0.0
    has_grad = all(c.noise_gradient is not None for c in constraints)
    has_lin = all(c.linear_decomposition is not None for c in constraints)
    for _ in range(samples):
        x = decision_sampler(rng)
        u = noise_set.sample_boundary(rng)
        lifted = lift.lift(u)
        lifted_norm_max = max(lifted_norm_max, float(np.linalg.norm(lifted, 1)))
        for c in constraints:
            if has_grad:
                g = c.noise_gradient(x, u)
                grad_max = max(grad_max, float(np.linalg.norm(g)))
            if has_lin:
                gvec, _ = c.linear_decomposition(x)
                reward_max = max(reward_max, float(np.linalg.norm(gvec, 1)))
                value_max = max(value_max, abs(float(gvec @ lifted)))
    sub = None
    if has_grad:
        sub = SubgradientConstants(noise_set.l2_diameter, 1.1 * grad_max, estimated=True)
    pert = None
    if has_lin and reward_max > 0 and value_max > 0:
        pert = PerturbationConstants(
            2.2 * lifted_norm_max, 1.1 * reward_max, 1.1 * value_max, estimated=True
        )
    return sub, pert


# ---------------------------------------------------------------------------
# Oracle contract


@dataclass(frozen=True)
class Feasible:
    """Oracle verdict: ``point`` violates no constraint by more than eps."""

    point: np.ndarray
    inner_iterations: int = 0


@dataclass(frozen=True)
class DualCertificate:
    """Simplex weights and noise assignment proving nominal infeasibility.

    ``bound`` is the value of the weighted Lagrangian lower bound; any
    strictly positive value certifies that no decision satisfies all
    constraints at this noise.
    """

    weights: np.ndarray
    noise: np.ndarray
    bound: float
    family: str = ""


@dataclass(frozen=True)
class Infeasible:
    """Oracle verdict: the nominal problem at this noise is empty."""

    certificate: DualCertificate


OracleVerdict = Union[Feasible, Infeasible]
FeasibilityOracle = Callable[[np.ndarray, Optional[np.ndarray]], OracleVerdict]


class OracleBudgetError(RuntimeError):
    """The oracle ran out of iterations without either verdict.

    Deliberately distinct from both verdicts: an uncertified point must
    never be treated as feasible, and exhaustion must never be treated
    as infeasibility.
    """

    def __init__(self, message: str, diagnostics: Optional[dict] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class BracketError(ValueError):
    """The bisection bracket did not actually contain the optimum."""


# ---------------------------------------------------------------------------
# Round counts and reports


def subgradient_rounds(epsilon: float, constants: SubgradientConstants) -> int:
    """ceil((G D / eps)^2) rounds, at least one."""
    _check_epsilon(epsilon)
    ratio = constants.gradient_bound * constants.diameter / epsilon
    return max(1, math.ceil(ratio * ratio))


def perturbation_rounds(
    epsilon: float,
    delta: float,
    num_constraints: int,
    constants: PerturbationConstants,
    mode: str = "formula",
) -> int:
    """Round count of the perturbed-leader solver.

    ``formula`` reproduces ``ceil(max(D G, F) * 16 F / eps^2 * log(m/delta))``
    verbatim.  ``derived`` returns the smallest T whose concentration bound
    ``2 sqrt(D F G / T) + 2 F sqrt(log(m/delta) / T) <= eps`` holds, which
    preserves the guarantee at far fewer rounds.
    """
    _check_epsilon(epsilon)
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if num_constraints < 1:
        raise ValueError("need at least one constraint")
    d, g, f = constants.diameter, constants.reward_bound, constants.value_bound
    log_term = math.log(num_constraints / delta)
    if mode == "formula":
        t = max(d * g, f) * (16.0 * f / epsilon**2) * log_term
        return max(1, math.ceil(t))
    if mode == "derived":
        if log_term < 0:
            log_term = 0.0
        root = (2.0 * math.sqrt(d * f * g) + 2.0 * f * math.sqrt(log_term)) / epsilon
        return max(1, math.ceil(root * root))
    raise ValueError(f"unknown rounds mode {mode!r}")


def _check_epsilon(epsilon: float) -> None:
    if not (epsilon > 0 and math.isfinite(epsilon)):
        raise ValueError(f"epsilon must be positive and finite, got {epsilon}")


@dataclass
class RunReport:
    """Everything a solve produced, for verification and reporting."""

    algorithm: str
    epsilon: float
    rounds: int
    step_size: float
    iterates: np.ndarray          # (T, ...) oracle outputs, round-major
    noise: np.ndarray             # (T, m, K) noise assignment per round
    violations: np.ndarray        # (T, m) constraint values at each round
    oracle_iterations: np.ndarray  # (T,) inner iterations per oracle call
    average: np.ndarray           # mean of the iterates, the returned decision
    wall_time: float
    constants_estimated: bool = False
    delta: Optional[float] = None
    seed: Optional[int] = None
    rounds_mode: Optional[str] = None

    def max_violation_per_round(self) -> np.ndarray:
        return self.violations.max(axis=1)


@dataclass(frozen=True)
class Solved:
    report: RunReport


@dataclass(frozen=True)
class CertifiedInfeasible:
    certificate: DualCertificate
    at_round: int


SolveOutcome = Union[Solved, CertifiedInfeasible]


def average_iterates(iterates: Sequence[np.ndarray]) -> np.ndarray:
    """Arithmetic mean of the oracle outputs (vectors or matrices)."""
    if len(iterates) == 0:
        raise ValueError("no iterates to average")
    stacked = np.stack([np.asarray(x, dtype=float) for x in iterates])
    if not np.all(np.isfinite(stacked)):
        raise ValueError("iterates contain non-finite entries")
    return stacked.mean(axis=0)


# ---------------------------------------------------------------------------
# Solvers


def dual_subgradient_solve(
    problem: RobustFeasibilityProblem,
    oracle: FeasibilityOracle,
    epsilon: float,
) -> SolveOutcome:
    """Noise ascent against the oracle; 2-eps guarantee on the average.

    Runs ``ceil((G D / eps)^2)`` rounds.  Each round moves every
    constraint's noise along its gradient at the previous decision and
    previous noise (projected back onto the set), then asks the oracle
    for a decision at the updated noise.  One extra bootstrap call at the
    set's center produces the decision the first update differentiates at.
    """
    _require_constraints(problem)
    constants = problem.subgradient
    if constants is None:
        raise ValueError("problem carries no gradient-ascent constants")
    for i, c in enumerate(problem.constraints):
        if c.noise_gradient is None:
            raise ValueError(f"constraint {i} has no noise gradient")
    _check_epsilon(epsilon)

    start_time = time.perf_counter()
    rounds = subgradient_rounds(epsilon, constants)
    if constants.gradient_bound > 0:
        eta = constants.diameter / (constants.gradient_bound * math.sqrt(rounds))
    else:
        eta = 0.0  # constraints do not react to noise; updates are no-ops

    noise_set = problem.noise_set
    m = problem.num_constraints
    k = noise_set.dimension
    noise = np.zeros((m, k))

    verdict = oracle(noise, None)
    if isinstance(verdict, Infeasible):
        return CertifiedInfeasible(verdict.certificate, at_round=0)
    x = verdict.point

    iterates = []
    noise_rounds = np.empty((rounds, m, k))
    violations = np.empty((rounds, m))
    inner = np.empty(rounds, dtype=int)
    for t in range(rounds):
        if problem.noise_gradient_block is not None:
            grads = np.asarray(problem.noise_gradient_block(x, noise), dtype=float)
        else:
            grads = np.stack(
                [c.noise_gradient(x, noise[i]) for i, c in enumerate(problem.constraints)]
            )
        for i in range(m):
            noise[i] = noise_set.project(noise[i] + eta * grads[i])
        verdict = oracle(noise, x)
        if isinstance(verdict, Infeasible):
            return CertifiedInfeasible(verdict.certificate, at_round=t + 1)
        x = verdict.point
        iterates.append(x)
        noise_rounds[t] = noise
        if problem.evaluate_block is not None:
            violations[t] = problem.evaluate_block(x, noise)
        else:
            violations[t] = [c.evaluate(x, noise[i]) for i, c in enumerate(problem.constraints)]
        inner[t] = verdict.inner_iterations

    report = RunReport(
        algorithm="dual-subgradient",
        epsilon=epsilon,
        rounds=rounds,
        step_size=eta,
        iterates=np.stack(iterates),
        noise=noise_rounds,
        violations=violations,
        oracle_iterations=inner,
        average=average_iterates(iterates),
        wall_time=time.perf_counter() - start_time,
        constants_estimated=constants.estimated,
    )
    return Solved(report)


def dual_perturbation_solve(
    problem: RobustFeasibilityProblem,
    oracle: FeasibilityOracle,
    epsilon: float,
    delta: float,
    seed: int,
    rounds_mode: str = "formula",
) -> SolveOutcome:
    """Perturbed-leader noise updates; 4-eps guarantee w.p. >= 1 - delta.

    Each round t draws a fresh uniform perturbation per constraint from
    ``[0, 1/eta]^d`` (counter-based, so runs are reproducible from the
    seed alone) and pessimizes the perturbed sum of the reward vectors of
    decisions 1..t-1.  The pessimization works on the lifted linear
    representation but always hands the oracle a point of the original
    noise set.
    """
    _require_constraints(problem)
    constants = problem.perturbation
    if constants is None:
        raise ValueError("problem carries no perturbed-leader constants")
    for i, c in enumerate(problem.constraints):
        if c.linear_decomposition is None:
            raise ValueError(f"constraint {i} has no linear decomposition")
    _check_epsilon(epsilon)

    start_time = time.perf_counter()
    rounds = perturbation_rounds(epsilon, delta, problem.num_constraints, constants, rounds_mode)
    eta = math.sqrt(
        constants.diameter / (constants.value_bound * constants.reward_bound * rounds)
    )
    perturb_bound = 1.0 / eta

    lift = problem.noise_lift or identity_lift(problem.noise_set)
    noise_set = problem.noise_set
    m = problem.num_constraints
    k = noise_set.dimension
    d = lift.dimension

    key = split_key(seed, 0)
    cumulative = np.zeros((m, d))
    noise = np.empty((m, k))
    x = None

    iterates = []
    noise_rounds = np.empty((rounds, m, k))
    violations = np.empty((rounds, m))
    inner = np.empty(rounds, dtype=int)
    for t in range(rounds):
        perturbed = cumulative + perturbation_block(key, t, (m, d), perturb_bound)
        if lift.pessimize_block is not None:
            noise = lift.pessimize_block(perturbed, epsilon)
        else:
            for i in range(m):
                noise[i] = lift.pessimize(perturbed[i], epsilon)
        _require_members(noise_set, noise)
        verdict = oracle(noise, x)
        if isinstance(verdict, Infeasible):
            return CertifiedInfeasible(verdict.certificate, at_round=t + 1)
        x = verdict.point
        iterates.append(x)
        noise_rounds[t] = noise
        inner[t] = verdict.inner_iterations
        if problem.linear_decomposition_block is not None and lift.lift_block is not None:
            g_block, h_block = problem.linear_decomposition_block(x)
            cumulative += g_block
            violations[t] = np.einsum("md,md->m", g_block, lift.lift_block(noise)) + h_block
        else:
            for i, c in enumerate(problem.constraints):
                g, h = c.linear_decomposition(x)
                cumulative[i] += g
                violations[t, i] = float(g @ lift.lift(noise[i])) + h

    report = RunReport(
        algorithm="dual-perturbation",
        epsilon=epsilon,
        rounds=rounds,
        step_size=eta,
        iterates=np.stack(iterates),
        noise=noise_rounds,
        violations=violations,
        oracle_iterations=inner,
        average=average_iterates(iterates),
        wall_time=time.perf_counter() - start_time,
        constants_estimated=constants.estimated,
        delta=delta,
        seed=seed,
        rounds_mode=rounds_mode,
    )
    return Solved(report)


def _require_constraints(problem: RobustFeasibilityProblem) -> None:
    if problem.num_constraints < 1:
        raise ValueError("problem has no constraints")


def _require_members(noise_set: UncertaintySet, noise: np.ndarray) -> None:
    if noise_set.contains_all(noise, tol=1e-7):
        return
    for i in range(noise.shape[0]):  # slow path only to name the offender
        if not noise_set.contains(noise[i], tol=1e-7):
            raise ValueError(
                f"pessimization returned a point outside the noise set for constraint {i}"
            )


# ---------------------------------------------------------------------------
# Bisection on the objective level


@dataclass
class BisectionResult:
    value: float
    witness: Optional[np.ndarray]
    solver_calls: int
    history: list = field(default_factory=list)  # (level, feasible) pairs


def with_level_constraint(
    problem: RobustFeasibilityProblem,
    objective: ConstraintSpec,
    level: float,
    gradient_bound: float = 0.0,
    value_bound: float = 0.0,
) -> RobustFeasibilityProblem:
    """Fold ``objective(x, u) <= level`` in as constraint 0.

    The optional bounds extend the problem constants to cover the new
    constraint; defaults suit noise-free objectives under gradient ascent.
    """

    def shifted_eval(x: np.ndarray, u: np.ndarray) -> float:
        return objective.evaluate(x, u) - level

    shifted_lin = None
    if objective.linear_decomposition is not None:
        base_lin = objective.linear_decomposition

        def shifted_lin(x: np.ndarray) -> tuple[np.ndarray, float]:
            g, h = base_lin(x)
            return g, h - level

    shifted = ConstraintSpec(
        evaluate=shifted_eval,
        noise_gradient=objective.noise_gradient,
        linear_decomposition=shifted_lin,
    )
    sub = problem.subgradient
    if sub is not None and gradient_bound > sub.gradient_bound:
        sub = replace(sub, gradient_bound=gradient_bound)
    pert = problem.perturbation
    if pert is not None and value_bound > pert.value_bound:
        pert = replace(pert, value_bound=value_bound)

    # The vectorized closures index rows by constraint, so each must grow a
    # row for the objective or be dropped in favor of the scalar path.
    eval_block = None
    if problem.evaluate_block is not None:
        base_eval_block = problem.evaluate_block

        def eval_block(x: np.ndarray, noise: np.ndarray) -> np.ndarray:
            rest = np.asarray(base_eval_block(x, noise[1:]), dtype=float)
            return np.concatenate([[shifted_eval(x, noise[0])], rest])

    grad_block = None
    if problem.noise_gradient_block is not None and objective.noise_gradient is not None:
        base_grad_block = problem.noise_gradient_block
        objective_grad = objective.noise_gradient

        def grad_block(x: np.ndarray, noise: np.ndarray) -> np.ndarray:
            head = np.asarray(objective_grad(x, noise[0]), dtype=float)
            rest = np.asarray(base_grad_block(x, noise[1:]), dtype=float)
            return np.vstack([head[None, :], rest])

    lin_block = None
    if problem.linear_decomposition_block is not None and shifted_lin is not None:
        base_lin_block = problem.linear_decomposition_block
        head_lin = shifted_lin

        def lin_block(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
            g0, h0 = head_lin(x)
            g, h = base_lin_block(x)
            g0 = np.asarray(g0, dtype=float)
            return np.vstack([g0[None, :], g]), np.concatenate([[h0], h])

    return replace(
        problem,
        constraints=(shifted,) + problem.constraints,
        subgradient=sub,
        perturbation=pert,
        evaluate_block=eval_block,
        noise_gradient_block=grad_block,
        linear_decomposition_block=lin_block,
    )


def robust_minimize_bisection(
    objective: ConstraintSpec,
    problem: RobustFeasibilityProblem,
    solve: Callable[[RobustFeasibilityProblem, float], SolveOutcome],
    lo: float,
    hi: float,
    tol: float,
    objective_gradient_bound: float = 0.0,
    objective_value_bound: float = 0.0,
) -> BisectionResult:
    """Minimize a robust objective by bisecting on its level.

    ``solve`` receives the augmented feasibility problem and the level
    under test and must run one of the two solvers on it.  The search
    needs ``ceil(log2((hi - lo) / tol))`` solver calls; when every call
    lands on the same side, one endpoint check confirms the bracket and a
    ``BracketError`` reports a bracket that never contained the optimum.
    Budget errors from the oracle propagate unchanged.
    """
    if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
        raise ValueError(f"invalid bracket [{lo}, {hi}]")
    if not (tol > 0 and math.isfinite(tol)):
        raise ValueError(f"tolerance must be positive and finite, got {tol}")

    def attempt(level: float) -> SolveOutcome:
        augmented = with_level_constraint(
            problem, objective, level, objective_gradient_bound, objective_value_bound
        )
        return solve(augmented, level)

    result = BisectionResult(value=hi, witness=None, solver_calls=0, history=[])
    original = (lo, hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        outcome = attempt(mid)
        result.solver_calls += 1
        if isinstance(outcome, Solved):
            result.history.append((mid, True))
            hi = mid
            result.witness = outcome.report.average
        else:
            result.history.append((mid, False))
            lo = mid
    if result.witness is None:
        # Every probe (if any) was infeasible; the answer rides on hi.
        outcome = attempt(original[1])
        result.solver_calls += 1
        if isinstance(outcome, CertifiedInfeasible):
            raise BracketError(f"problem is infeasible at the top of the bracket {original[1]}")
        result.history.append((original[1], True))
        result.witness = outcome.report.average
        result.value = original[1]
        return result
    if not any(not ok for _, ok in result.history):
        # Every probe was feasible; make sure the optimum is not below lo.
        outcome = attempt(original[0])
        result.solver_calls += 1
        if isinstance(outcome, Solved):
            raise BracketError(f"problem is already feasible at the bottom of the bracket {original[0]}")
        result.history.append((original[0], False))
    result.value = hi
    return result
