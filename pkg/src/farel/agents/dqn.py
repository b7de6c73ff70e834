"""DQN baseline: single-objective Q-learning with an experience replay buffer."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..neural import IDENTITY, RELU, Adam, DenseNet, load_net, save_net


@dataclass(frozen=True)
class DqnConfig:
    hidden: int = 64
    epsilon: float = 0.1
    gamma: float = 1.0
    lr: float = 1e-3
    buffer_capacity: int = 10_000
    batch_size: int = 32
    target_sync_every: int = 100
    train_start: int = 200


class ReplayBuffer:
    def __init__(self, capacity: int, obs_dim: int):
        self.capacity = capacity
        self._obs = np.zeros((capacity, obs_dim))
        self._next_obs = np.zeros((capacity, obs_dim))
        self._actions = np.zeros(capacity, dtype=np.int64)
        self._rewards = np.zeros(capacity)
        self._terminal = np.zeros(capacity, dtype=bool)
        self.size = 0
        self._cursor = 0

    def push(self, obs, action, reward, next_obs, terminal) -> None:
        i = self._cursor
        self._obs[i] = obs
        self._actions[i] = action
        self._rewards[i] = reward
        self._next_obs[i] = next_obs
        self._terminal[i] = terminal
        self._cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator):
        idx = rng.integers(0, self.size, size=batch_size)
        return (
            self._obs[idx],
            self._actions[idx],
            self._rewards[idx],
            self._next_obs[idx],
            self._terminal[idx],
        )


class DqnAgent:
    """epsilon-greedy Q-network with a periodically synced target net."""

    def __init__(self, obs_dim: int, n_actions: int, config: DqnConfig | None = None, *, rng: np.random.Generator):
        self.config = config or DqnConfig()
        self.n_actions = n_actions
        self.q_net = DenseNet.build([obs_dim, self.config.hidden, n_actions], [RELU, IDENTITY], rng)
        self.target_net = self.q_net.copy()
        self.buffer = ReplayBuffer(self.config.buffer_capacity, obs_dim)
        self.optimizer = Adam(self.config.lr)
        self._train_steps = 0

    def act(self, obs: np.ndarray, rng: np.random.Generator) -> tuple[int, tuple[float, ...]]:
        """Greedy action with probability 1 - epsilon, else uniform.

        The returned distribution is the full epsilon-greedy mixture, which is
        what individual-fairness comparisons consume.
        """
        eps = self.config.epsilon
        greedy = self.greedy_action(obs)
        dist = np.full(self.n_actions, eps / self.n_actions)
        dist[greedy] += 1.0 - eps
        action = greedy if rng.random() >= eps else int(rng.integers(self.n_actions))
        return action, tuple(float(p) for p in dist)

    def greedy_action(self, obs: np.ndarray) -> int:
        return int(np.argmax(self.q_net.forward(obs)))

    def observe_transition(self, obs, action, reward, next_obs, terminal, rng) -> float | None:
        """Store a transition and run one training step once warmed up."""
        self.buffer.push(obs, action, reward, next_obs, terminal)
        if self.buffer.size < max(self.config.train_start, self.config.batch_size):
            return None
        return self.train_step(self.buffer.sample(self.config.batch_size, rng))

    def train_step(self, batch) -> float:
        """One squared-TD-error gradient step; returns the batch loss."""
        obs, actions, rewards, next_obs, terminal = batch
        next_q = self.target_net.forward(next_obs)
        targets = rewards + self.config.gamma * next_q.max(axis=1) * (~terminal)
        out, caches = self.q_net.forward_cached(obs)
        chosen = out[np.arange(len(actions)), actions]
        errors = chosen - targets
        grad_out = np.zeros_like(out)
        grad_out[np.arange(len(actions)), actions] = 2.0 * errors / len(actions)
        grads, _ = self.q_net.backward(caches, grad_out)
        self.optimizer.step(self.q_net, grads)
        self._train_steps += 1
        if self._train_steps % self.config.target_sync_every == 0:
            self.target_net = self.q_net.copy()
        return float((errors**2).mean())

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        save_net(self.q_net, directory / "q_net.bin")
        manifest = {"agent": "dqn", "n_actions": self.n_actions, "config": asdict(self.config)}
        (directory / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))

    @classmethod
    def load(cls, directory, *, rng: np.random.Generator | None = None) -> "DqnAgent":
        directory = Path(directory)
        manifest = json.loads((directory / "manifest.json").read_text())
        config = DqnConfig(**manifest["config"])
        net = load_net(directory / "q_net.bin")
        agent = cls.__new__(cls)
        agent.config = config
        agent.n_actions = manifest["n_actions"]
        agent.q_net = net
        agent.target_net = net.copy()
        agent.buffer = ReplayBuffer(config.buffer_capacity, net.input_width)
        agent.optimizer = Adam(config.lr)
        agent._train_steps = 0
        return agent
