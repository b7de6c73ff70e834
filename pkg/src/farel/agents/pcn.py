"""Desired-return conditioned multi-objective agent.

The network takes the observation, the desired horizon and the desired return
vector through three sigmoid embeddings whose outputs feed a two-layer head
producing action logits. Training is pure classification: each buffered
transition is labelled with the action that was executed, conditioned on the
episode-suffix return and remaining horizon at that step.

Episodes live in a buffer ordered by non-dominance rank (then crowding);
commands for new rollouts are drawn from the currently non-dominated episodes
with one objective inflated by the front's per-objective spread, which pushes
exploration outward along the front.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..interactions import EpisodeTrace
from ..neural import IDENTITY, RELU, SIGMOID, Adam, DenseNet, load_net, save_net
from ..pareto import _dominated_mask, crowding_distance, nondominated_fronts

CONCAT, PRODUCT = "concat", "product"


@dataclass(frozen=True)
class PcnConfig:
    hidden: int = 64
    lr: float = 1e-3
    batch_size: int = 256
    buffer_capacity: int = 1024
    warmup_episodes: int = 16
    updates_per_episode: int = 8
    combine: str = CONCAT

    def __post_init__(self):
        if self.combine not in (CONCAT, PRODUCT):
            raise ValueError(f"unknown embedding combination {self.combine!r}")


@dataclass(frozen=True)
class Command:
    desired_return: tuple[float, ...]
    desired_horizon: float

    def __post_init__(self):
        if self.desired_horizon < 1:
            raise ValueError("desired horizon must stay at least 1")


def update_command(cmd: Command, reward: np.ndarray) -> Command:
    """Subtract the received reward and tick the horizon down, floored at 1."""
    desired = tuple(float(r - x) for r, x in zip(cmd.desired_return, reward))
    return Command(desired, max(cmd.desired_horizon - 1.0, 1.0))


class EpisodeRecord:
    """One episode's transitions plus precomputed suffix returns."""

    def __init__(self, observations: np.ndarray, actions: np.ndarray, rewards: np.ndarray):
        self.observations = np.asarray(observations, dtype=np.float64)
        self.actions = np.asarray(actions, dtype=np.int64)
        self.rewards = np.asarray(rewards, dtype=np.float64)
        if not len(self.rewards):
            raise ValueError("cannot buffer an empty episode")
        self.suffix_returns = np.cumsum(self.rewards[::-1], axis=0)[::-1].copy()

    @classmethod
    def from_trace(cls, trace: EpisodeTrace) -> "EpisodeRecord":
        return cls(
            np.stack([x.state.encode() for x in trace]),
            np.array([x.action for x in trace]),
            np.stack([x.reward.as_array() for x in trace]),
        )

    @property
    def length(self) -> int:
        return len(self.actions)

    @property
    def return_vec(self) -> np.ndarray:
        return self.suffix_returns[0]


class PcnAgent:
    def __init__(
        self,
        obs_dim: int,
        n_actions: int,
        n_objectives: int,
        config: PcnConfig | None = None,
        *,
        rng: np.random.Generator,
    ):
        self.config = config or PcnConfig()
        self.n_actions = n_actions
        self.n_objectives = n_objectives
        h = self.config.hidden
        self.embed_state = DenseNet.build([obs_dim, h], [SIGMOID], rng)
        self.embed_horizon = DenseNet.build([1, h], [SIGMOID], rng)
        self.embed_return = DenseNet.build([n_objectives, h], [SIGMOID], rng)
        head_in = 3 * h if self.config.combine == CONCAT else h
        self.head = DenseNet.build([head_in, h, n_actions], [RELU, IDENTITY], rng)
        self._optimizers = {
            "embed_state": Adam(self.config.lr),
            "embed_horizon": Adam(self.config.lr),
            "embed_return": Adam(self.config.lr),
            "head": Adam(self.config.lr),
        }
        self.buffer: list[EpisodeRecord] = []
        self.return_scale = np.ones(n_objectives)
        self.horizon_scale = 1.0
        self._front: list[int] = []
        self._flat_cache = None

    # -- inference -----------------------------------------------------------

    def _combine(self, e_s, e_h, e_r):
        if self.config.combine == CONCAT:
            return np.concatenate([e_s, e_h, e_r], axis=-1)
        return e_s * e_h * e_r

    def action_distribution(self, obs: np.ndarray, command: Command) -> np.ndarray:
        e_s = self.embed_state.forward(obs)
        e_h = self.embed_horizon.forward(np.array([command.desired_horizon / self.horizon_scale]))
        e_r = self.embed_return.forward(np.asarray(command.desired_return) / self.return_scale)
        logits = self.head.forward(self._combine(e_s, e_h, e_r))
        logits = logits - logits.max()
        p = np.exp(logits)
        return p / p.sum()

    def act(self, obs: np.ndarray, command: Command, rng: np.random.Generator) -> tuple[int, tuple[float, ...]]:
        p = self.action_distribution(obs, command)
        action = int(np.searchsorted(np.cumsum(p), rng.random()))
        action = min(action, self.n_actions - 1)
        return action, tuple(float(v) for v in p)

    # -- buffer --------------------------------------------------------------

    def add_episode(self, record: EpisodeRecord) -> None:
        if record.rewards.shape[1] != self.n_objectives:
            raise ValueError("episode reward width does not match the agent's objectives")
        self.buffer.append(record)
        self._flat_cache = None
        self._update_front(len(self.buffer) - 1, record.return_vec)
        if len(self.buffer) > self.config.buffer_capacity:
            self._prune_buffer()
        # normalisation anchors only ever widen, which keeps training stable
        self.return_scale = np.maximum(self.return_scale, np.abs(record.return_vec))
        self.horizon_scale = float(max(self.horizon_scale, record.length))

    def _returns_matrix(self) -> np.ndarray:
        return np.stack([ep.return_vec for ep in self.buffer])

    def _update_front(self, idx: int, ret: np.ndarray) -> None:
        """Incremental front maintenance: O(front size) per added episode."""
        for i in self._front:
            other = self.buffer[i].return_vec
            if np.all(other >= ret) and np.any(other > ret):
                return
        self._front = [
            i
            for i in self._front
            if not (np.all(ret >= self.buffer[i].return_vec) and np.any(ret > self.buffer[i].return_vec))
        ]
        self._front.append(idx)

    def _prune_buffer(self) -> None:
        """Drop to 7/8 capacity by (front rank, crowding distance).

        The hysteresis keeps the quadratic non-dominated sort off the per-add
        path; the buffer never exceeds its capacity.
        """
        target = max(1, self.config.buffer_capacity * 7 // 8)
        returns = self._returns_matrix()
        fronts = nondominated_fronts(returns)
        ranked: list[int] = []
        for front in fronts:
            crowding = crowding_distance(returns[front])
            order = np.argsort(-crowding, kind="stable")
            ranked.extend(front[i] for i in order)
            if len(ranked) >= target:
                break
        keep = sorted(ranked[:target])
        self.buffer = [self.buffer[i] for i in keep]
        self._flat_cache = None
        dominated = _dominated_mask(self._returns_matrix())
        self._front = [i for i, d in enumerate(dominated) if not d]

    def nondominated_episodes(self) -> list[EpisodeRecord]:
        return [self.buffer[i] for i in self._front]

    def select_command(self, rng: np.random.Generator) -> Command:
        """A non-dominated episode's return with one objective pushed outward."""
        front = self.nondominated_episodes()
        if not front:
            raise ValueError("cannot select a command from an empty buffer")
        returns = np.stack([ep.return_vec for ep in front])
        std = returns.std(axis=0, ddof=1) if len(front) > 1 else np.zeros(self.n_objectives)
        episode = front[int(rng.integers(len(front)))]
        desired = episode.return_vec.copy()
        objective = int(rng.integers(self.n_objectives))
        desired[objective] += std[objective]
        return Command(tuple(float(v) for v in desired), float(max(episode.length, 1)))

    # -- training --------------------------------------------------------------

    def train(self, rng: np.random.Generator, n_updates: int | None = None) -> float:
        """Cross-entropy on executed actions over sampled buffered transitions."""
        n_updates = n_updates if n_updates is not None else self.config.updates_per_episode
        losses = [self._train_batch(rng) for _ in range(n_updates)]
        return float(np.mean(losses))

    def _flat_buffer(self):
        if self._flat_cache is None:
            self._flat_cache = (
                np.concatenate([ep.observations for ep in self.buffer]),
                np.concatenate([ep.actions for ep in self.buffer]),
                np.concatenate([ep.suffix_returns for ep in self.buffer]),
                np.concatenate(
                    [np.arange(ep.length, 0, -1, dtype=np.float64) for ep in self.buffer]
                )[:, None],
            )
        return self._flat_cache

    def _sample_batch(self, rng: np.random.Generator):
        obs, actions, returns, horizons = self._flat_buffer()
        idx = rng.integers(0, len(actions), size=self.config.batch_size)
        return obs[idx], actions[idx], returns[idx], horizons[idx]

    def _train_batch(self, rng: np.random.Generator) -> float:
        obs, actions, returns, horizons = self._sample_batch(rng)
        batch = len(actions)
        e_s, cache_s = self.embed_state.forward_cached(obs)
        e_h, cache_h = self.embed_horizon.forward_cached(horizons / self.horizon_scale)
        e_r, cache_r = self.embed_return.forward_cached(returns / self.return_scale)
        combined = self._combine(e_s, e_h, e_r)
        logits, cache_head = self.head.forward_cached(combined)

        shifted = logits - logits.max(axis=1, keepdims=True)
        exp = np.exp(shifted)
        probs = exp / exp.sum(axis=1, keepdims=True)
        rows = np.arange(batch)
        loss = float(-np.log(np.maximum(probs[rows, actions], 1e-300)).mean())

        grad_logits = probs.copy()
        grad_logits[rows, actions] -= 1.0
        grad_logits /= batch
        grads_head, grad_combined = self.head.backward(cache_head, grad_logits)
        h = self.config.hidden
        if self.config.combine == CONCAT:
            grad_s, grad_h, grad_r = (
                grad_combined[:, :h],
                grad_combined[:, h : 2 * h],
                grad_combined[:, 2 * h :],
            )
        else:
            grad_s = grad_combined * e_h * e_r
            grad_h = grad_combined * e_s * e_r
            grad_r = grad_combined * e_s * e_h
        grads_s, _ = self.embed_state.backward(cache_s, grad_s)
        grads_h, _ = self.embed_horizon.backward(cache_h, grad_h)
        grads_r, _ = self.embed_return.backward(cache_r, grad_r)
        self._optimizers["head"].step(self.head, grads_head)
        self._optimizers["embed_state"].step(self.embed_state, grads_s)
        self._optimizers["embed_horizon"].step(self.embed_horizon, grads_h)
        self._optimizers["embed_return"].step(self.embed_return, grads_r)
        return loss

    # -- persistence -------------------------------------------------------------

    def save(self, directory, objective_labels, config_hash: str = "") -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for name, net in self._nets().items():
            save_net(net, directory / f"{name}.bin")
        manifest = {
            "agent": "pcn",
            "objectives": list(objective_labels),
            "n_actions": self.n_actions,
            "config": asdict(self.config),
            "config_hash": config_hash,
            "return_scale": [float(v) for v in self.return_scale],
            "horizon_scale": self.horizon_scale,
        }
        (directory / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))

    def _nets(self) -> dict[str, DenseNet]:
        return {
            "embed_state": self.embed_state,
            "embed_horizon": self.embed_horizon,
            "embed_return": self.embed_return,
            "head": self.head,
        }

    @classmethod
    def load(cls, directory) -> tuple["PcnAgent", list[str]]:
        directory = Path(directory)
        manifest = json.loads((directory / "manifest.json").read_text())
        config = PcnConfig(**manifest["config"])
        agent = cls.__new__(cls)
        agent.config = config
        agent.n_actions = manifest["n_actions"]
        agent.embed_state = load_net(directory / "embed_state.bin")
        agent.embed_horizon = load_net(directory / "embed_horizon.bin")
        agent.embed_return = load_net(directory / "embed_return.bin")
        agent.head = load_net(directory / "head.bin")
        agent.n_objectives = agent.embed_return.input_width
        agent._optimizers = {name: Adam(config.lr) for name in agent._nets()}
        agent.buffer = []
        agent.return_scale = np.array(manifest["return_scale"])
        agent.horizon_scale = manifest["horizon_scale"]
        return agent, manifest["objectives"]


class PcnRolloutPolicy:
    """Episode policy: act on the current command, updating it per step."""

    def __init__(self, agent: PcnAgent, command: Command):
        self.agent = agent
        self.command = command

    def act(self, obs, rng):
        return self.agent.act(obs, self.command, rng)

    def observe(self, interaction) -> None:
        self.command = update_command(self.command, interaction.reward.as_array())


class UniformRandomPolicy:
    def __init__(self, n_actions: int):
        self.n_actions = n_actions
        self._dist = tuple(1.0 / n_actions for _ in range(n_actions))

    def act(self, obs, rng):
        return int(rng.integers(self.n_actions)), self._dist
