"""Online learners that drive the noise updates of the robust solvers.

Two primitives, both playing points of a compact convex set against a
stream of reward functions:

* projected online gradient ascent, for concave (here: linear-in-noise)
  rewards, with the classic ``step = diameter / (grad_bound * sqrt(T))``
  tuning whose regret is at most ``grad_bound * diameter * sqrt(T)``;
* follow-the-perturbed-leader for linear rewards over an arbitrary set
  accessed through a linear-maximization procedure, with fresh uniform
  perturbations drawn from ``[0, bound]^d`` each round.

States are immutable; stepping returns a new state.  FPL randomness is
counter-based (Philox), so a state replayed from the same counter yields
the same decision, and distinct counters are independent streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, List

import numpy as np

from .uncertainty import UncertaintySet

__all__ = [
    "OgdState",
    "FplState",
    "RegretTrace",
    "ogd_step",
    "fpl_step",
    "accumulate_reward",
    "measure_regret",
    "perturbation_block",
    "split_key",
    "suboptimal_ball_max",
]

LinearMaximizer = Callable[[np.ndarray], np.ndarray]

# Each counter index owns a disjoint 2^64 block of the Philox counter space,
# far more than one block of draws ever consumes.
_COUNTER_STRIDE = 1 << 64
_KEY_MASK = (1 << 64) - 1


def split_key(master_seed: int, index: int) -> int:
    """Derive an independent 128-bit Philox key from a seed and a lane index."""
    return (int(master_seed) & _KEY_MASK) | ((int(index) + 1) << 64)


def perturbation_block(key: int, counter: int, shape: tuple[int, ...], bound: float) -> np.ndarray:
    """Uniform draw from [0, bound]^shape at a named position of the stream.

    Same (key, counter) always reproduces the same block; different counters
    are independent.  A zero bound yields deterministic zeros.
    """
    if bound < 0 or not math.isfinite(bound):
        raise ValueError(f"perturbation bound must be finite and nonnegative, got {bound}")
    if bound == 0.0:
        return np.zeros(shape)
    rng = np.random.Generator(np.random.Philox(key=key, counter=counter * _COUNTER_STRIDE))
    return rng.uniform(0.0, bound, size=shape)


@dataclass(frozen=True)
class OgdState:
    """Current point and the fixed step size of gradient ascent."""

    point: np.ndarray
    step_size: float

    def __post_init__(self) -> None:
        p = np.asarray(self.point, dtype=float)
        if not np.all(np.isfinite(p)):
            raise ValueError("point has non-finite entries")
        if not (self.step_size > 0 and math.isfinite(self.step_size)):
            raise ValueError(f"step size must be positive and finite, got {self.step_size}")
        object.__setattr__(self, "point", p)


def ogd_step(state: OgdState, gradient: np.ndarray, region: UncertaintySet) -> OgdState:
    """Ascend along the reward gradient and project back onto the region."""
    gradient = np.asarray(gradient, dtype=float)
    if gradient.shape != state.point.shape:
        raise ValueError(
            f"gradient shape {gradient.shape} does not match point shape {state.point.shape}"
        )
    if not np.all(np.isfinite(gradient)):
        raise ValueError("gradient has non-finite entries")
    moved = state.point + state.step_size * gradient
    return replace(state, point=region.project(moved))


@dataclass(frozen=True)
class FplState:
    """Follow-the-perturbed-leader state over a d-dimensional reward space.

    ``perturbation_bound`` is the top of the uniform cube the fresh
    perturbation is drawn from each step (the reciprocal of the learning
    rate); zero disables perturbation and recovers follow-the-leader.
    """

    cumulative_reward: np.ndarray
    perturbation_bound: float
    key: int
    counter: int = 0

    def __post_init__(self) -> None:
        w = np.asarray(self.cumulative_reward, dtype=float)
        if w.ndim != 1:
            raise ValueError(f"cumulative reward must be a vector, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("cumulative reward has non-finite entries")
        if self.perturbation_bound < 0 or not math.isfinite(self.perturbation_bound):
            raise ValueError(
                f"perturbation bound must be finite and nonnegative, got {self.perturbation_bound}"
            )
        object.__setattr__(self, "cumulative_reward", w)


def fpl_step(state: FplState, maximizer: LinearMaximizer) -> tuple[np.ndarray, FplState]:
    """Decide by maximizing the perturbed reward total; advance the stream.

    The maximizer may be approximate: any procedure returning a feasible
    point within some additive shortfall of the true linear maximum.
    Calling twice on the same state reproduces the decision exactly.
    """
    d = state.cumulative_reward.shape[0]
    p = perturbation_block(state.key, state.counter, (d,), state.perturbation_bound)
    decision = maximizer(state.cumulative_reward + p)
    return decision, replace(state, counter=state.counter + 1)


def accumulate_reward(state: FplState, reward: np.ndarray) -> FplState:
    """Fold the revealed reward vector into the running total."""
    reward = np.asarray(reward, dtype=float)
    if reward.shape != state.cumulative_reward.shape:
        raise ValueError(
            f"reward shape {reward.shape} does not match state shape "
            f"{state.cumulative_reward.shape}"
        )
    if not np.all(np.isfinite(reward)):
        raise ValueError("reward has non-finite entries")
    return replace(state, cumulative_reward=state.cumulative_reward + reward)


@dataclass
class RegretTrace:
    """Recorded play of an online learner plus the constants of its bound.

    ``reward_bound`` dominates every per-round reward magnitude |f . x|,
    ``l1_bound`` dominates every ||f||_1, and ``l1_diameter`` is the
    l1 diameter of the decision set.
    """

    reward_bound: float
    l1_bound: float
    l1_diameter: float
    rewards: List[np.ndarray] = field(default_factory=list)
    decisions: List[np.ndarray] = field(default_factory=list)

    def record(self, reward: np.ndarray, decision: np.ndarray) -> None:
        self.rewards.append(np.asarray(reward, dtype=float))
        self.decisions.append(np.asarray(decision, dtype=float))

    def __len__(self) -> int:
        return len(self.rewards)

    def played_total(self) -> float:
        return float(sum(f @ x for f, x in zip(self.rewards, self.decisions)))

    def constants_dominate(self, rtol: float = 1e-9) -> bool:
        """Whether the recorded constants really bound the recorded play."""
        slack = 1.0 + rtol
        for f, x in zip(self.rewards, self.decisions):
            if abs(float(f @ x)) > self.reward_bound * slack:
                return False
            if float(np.linalg.norm(f, 1)) > self.l1_bound * slack:
                return False
        return True


def measure_regret(trace: RegretTrace, exact_max: LinearMaximizer) -> float:
    """Regret of the recorded play against the best fixed decision.

    The comparator is computed by one call to the exact linear maximizer
    on the summed reward vector, so this is an offline quantity and does
    not depend on how the decisions were produced.
    """
    if len(trace) == 0:
        raise ValueError("cannot measure regret of an empty trace")
    total_reward = np.sum(np.stack(trace.rewards), axis=0)
    best_fixed = exact_max(total_reward)
    return float(total_reward @ best_fixed) - trace.played_total()


def suboptimal_ball_max(dimension: int, shortfall: float) -> LinearMaximizer:
    """A deliberately degraded unit-ball maximizer for stress testing.

    Returns points whose objective trails the true maximum by exactly
    ``shortfall`` whenever geometry allows, by rotating away from the
    optimal direction within the ball.
    """
    if shortfall < 0:
        raise ValueError(f"shortfall must be nonnegative, got {shortfall}")

    def maximizer(g: np.ndarray) -> np.ndarray:
        g = np.asarray(g, dtype=float)
        norm = float(np.linalg.norm(g))
        if norm == 0.0:
            return np.zeros(dimension)
        direction = g / norm
        cos = max(-1.0, 1.0 - shortfall / norm)
        if dimension == 1:
            return cos * direction
        axis = int(np.argmin(np.abs(direction)))
        ortho = np.zeros(dimension)
        ortho[axis] = 1.0
        ortho -= (ortho @ direction) * direction
        ortho /= float(np.linalg.norm(ortho))
        return cos * direction + math.sqrt(max(0.0, 1.0 - cos * cos)) * ortho

    return maximizer
