"""Training and evaluation loops tying agents, environments and fairness together.

Every fairness history is owned by exactly one episode: each rollout gets a
fresh engine, so episode returns are sums of within-episode fairness values
and episodes are independent given their seeds.

Seed derivation: a run seed spawns three independent streams (agent
exploration/training, training-episode seeds, evaluation-episode seeds), so
evaluation never perturbs training randomness.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .agents.dqn import DqnAgent
from .agents.pcn import Command, EpisodeRecord, PcnAgent, PcnRolloutPolicy, UniformRandomPolicy
from .engine import FairnessEngine
from .episode import run_episode
from .interactions import EpisodeTrace, Interaction
from .pareto import PolicyPoint


def run_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    agent_rng, train_rng, eval_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3)
    )
    return agent_rng, train_rng, eval_rng


@dataclass
class TrainLog:
    episode_returns: list[np.ndarray] = field(default_factory=list)
    window_sizes: list[int] = field(default_factory=list)
    losses: list[float] = field(default_factory=list)


def train_pcn(
    env,
    agent: PcnAgent,
    make_engine: Callable[[], FairnessEngine],
    total_steps: int,
    *,
    seed: int,
    on_episode: Callable[[EpisodeTrace], None] | None = None,
) -> TrainLog:
    """Episode loop: roll out on a buffered command, buffer, train, repeat."""
    agent_rng, train_rng, _ = run_streams(seed)
    log = TrainLog()
    step = 0
    episode = 0
    while step < total_steps:
        engine = make_engine()
        if episode < agent.config.warmup_episodes or not agent.buffer:
            policy = UniformRandomPolicy(agent.n_actions)
        else:
            policy = PcnRolloutPolicy(agent, agent.select_command(agent_rng))
        max_steps = min(env.horizon, total_steps - step)
        trace = run_episode(
            env, policy, engine, max_steps, seed=int(train_rng.integers(2**31)), rng=agent_rng
        )
        if not len(trace):
            break
        record = EpisodeRecord.from_trace(trace)
        agent.add_episode(record)
        if episode + 1 >= agent.config.warmup_episodes:
            log.losses.append(agent.train(agent_rng))
        log.episode_returns.append(record.return_vec)
        log.window_sizes.extend(engine.window_sizes)
        if on_episode is not None:
            on_episode(trace)
        step += len(trace)
        episode += 1
    return log


def train_dqn_fair(
    env,
    agent: DqnAgent,
    make_engine: Callable[[], FairnessEngine],
    total_steps: int,
    *,
    seed: int,
) -> TrainLog:
    """DQN training on the scalar reward, with fairness tracked alongside.

    The agent optimises R only; the engine still observes every interaction
    so the run produces the same per-step fairness values and window-size
    profile as a multi-objective run would.
    """
    agent_rng, train_rng, _ = run_streams(seed)
    log = TrainLog()
    step = 0
    while step < total_steps:
        engine = make_engine()
        state = env.reset(int(train_rng.integers(2**31)))
        obs = state.encode()
        rewards = []
        t = 0
        for _ in range(min(env.horizon, total_steps - step)):
            action, action_dist = agent.act(obs, agent_rng)
            result = env.step(action)
            next_obs = result.next_state.encode()
            agent.observe_transition(
                obs, action, result.perf_reward, next_obs, result.terminated, agent_rng
            )
            values = engine.observe(
                Interaction(
                    t=t,
                    state=state,
                    individual=result.individual,
                    groups=result.groups,
                    action=action,
                    action_dist=action_dist,
                    reward=None,
                    feedback=result.feedback,
                )
            )
            rewards.append(
                np.concatenate(
                    [[result.perf_reward], [values[s.kind].or_zero() for s in engine.notions]]
                )
            )
            state = result.next_state
            obs = next_obs
            t += 1
            step += 1
            if result.terminated:
                break
        if rewards:
            log.episode_returns.append(np.sum(rewards, axis=0))
        log.window_sizes.extend(engine.window_sizes)
    return log


def train_dqn_scalar(env, agent: DqnAgent, total_steps: int, *, seed: int) -> list[float]:
    """Train a DQN on the performance reward alone; returns episode returns."""
    agent_rng, train_rng, _ = run_streams(seed)
    returns: list[float] = []
    step = 0
    while step < total_steps:
        state = env.reset(int(train_rng.integers(2**31)))
        obs = state.encode()
        episode_return = 0.0
        for _ in range(min(env.horizon, total_steps - step)):
            action, _ = agent.act(obs, agent_rng)
            result = env.step(action)
            next_obs = result.next_state.encode()
            agent.observe_transition(obs, action, result.perf_reward, next_obs, result.terminated, agent_rng)
            episode_return += result.perf_reward
            obs = next_obs
            step += 1
            if result.terminated:
                break
        returns.append(episode_return)
    return returns


class DqnGreedyPolicy:
    """Greedy wrapper exposing the degenerate action distribution."""

    def __init__(self, agent: DqnAgent):
        self.agent = agent

    def act(self, obs, rng):
        action = self.agent.greedy_action(obs)
        dist = tuple(1.0 if a == action else 0.0 for a in range(self.agent.n_actions))
        return action, dist


def evaluate_policy(
    env,
    policy_factory: Callable[[], object],
    make_engine: Callable[[], FairnessEngine],
    episodes: int,
    *,
    seed: int,
    policy_seed: int = 0,
) -> tuple[np.ndarray, list[EpisodeTrace]]:
    """Mean episode return vector of a policy over fresh evaluation episodes."""
    _, _, eval_rng = run_streams(seed)
    returns = []
    traces = []
    for _ in range(episodes):
        trace = run_episode(
            env,
            policy_factory(),
            make_engine(),
            env.horizon,
            seed=int(eval_rng.integers(2**31)),
            rng=np.random.default_rng(int(eval_rng.integers(2**31))),
        )
        returns.append(trace.episode_return().as_array())
        traces.append(trace)
    return np.mean(returns, axis=0), traces


def pcn_policy_points(
    env,
    agent: PcnAgent,
    make_engine: Callable[[], FairnessEngine],
    *,
    seed: int,
    eval_episodes: int,
    max_policies: int = 30,
) -> list[PolicyPoint]:
    """Evaluate (checkpoint, command) pairs drawn from non-dominated episodes."""
    episodes = agent.nondominated_episodes()[:max_policies]
    points = []
    for i, ep in enumerate(episodes):
        command = Command(tuple(float(v) for v in ep.return_vec), float(max(ep.length, 1)))
        mean_return, _ = evaluate_policy(
            env,
            lambda cmd=command: PcnRolloutPolicy(agent, cmd),
            make_engine,
            eval_episodes,
            seed=seed + 7919 * (i + 1),
        )
        points.append(
            PolicyPoint(
                tuple(float(v) for v in mean_return),
                seed=seed,
                provenance={"command_return": list(command.desired_return), "horizon": command.desired_horizon},
            )
        )
    return points
