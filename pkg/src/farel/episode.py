"""Environment contract and the episode loop that wires fairness into rewards."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .engine import FairnessEngine
from .features import FeatureVector
from .interactions import EpisodeTrace, Interaction
from .objectives import assemble_reward


@dataclass(frozen=True)
class StepResult:
    """Outcome of one environment step.

    ``individual`` and ``groups`` describe who was acted upon in the state
    the action was chosen for; ``feedback`` is the ground-truth correct
    action when the environment reveals one.
    """

    next_state: FeatureVector
    perf_reward: float
    feedback: int | None
    individual: FeatureVector
    groups: frozenset[str]
    terminated: bool = False


class Environment(Protocol):
    n_actions: int
    horizon: int

    def reset(self, seed: int) -> FeatureVector: ...

    def step(self, action: int) -> StepResult: ...


class Policy(Protocol):
    def act(self, obs: np.ndarray, rng: np.random.Generator) -> tuple[int, tuple[float, ...]]: ...


class EpisodeError(RuntimeError):
    """Raised when the episode loop must abort, e.g. on a malformed interaction."""

    def __init__(self, t: int, message: str):
        super().__init__(f"episode aborted at t={t}: {message}")
        self.t = t


def run_episode(
    env: Environment,
    policy: Policy,
    fairness: FairnessEngine,
    max_steps: int,
    *,
    seed: int,
    rng: np.random.Generator | None = None,
) -> EpisodeTrace:
    """Roll out one episode, computing fairness rewards after every step.

    The fairness components of step t are the configured notions evaluated on
    the history including interaction t itself. The trace is flagged as
    truncated when the step limit cuts the episode short.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    state = env.reset(seed)
    interactions: list[Interaction] = []
    truncated = False
    for t in range(max_steps):
        action, action_dist = policy.act(state.encode(), rng)
        result = env.step(action)
        try:
            interaction = Interaction(
                t=t,
                state=state,
                individual=result.individual,
                groups=result.groups,
                action=action,
                action_dist=action_dist,
                reward=None,
                feedback=result.feedback,
            )
            values = fairness.observe(interaction)
        except ValueError as exc:
            raise EpisodeError(t, str(exc)) from exc
        reward = assemble_reward(result.perf_reward, {k: v.or_zero() for k, v in values.items()})
        completed = interaction.with_reward(reward)
        interactions.append(completed)
        observe = getattr(policy, "observe", None)
        if observe is not None:
            observe(completed)
        state = result.next_state
        if result.terminated:
            break
    else:
        truncated = max_steps > 0
    return EpisodeTrace(interactions, truncated=truncated)
