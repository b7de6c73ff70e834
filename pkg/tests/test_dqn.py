import numpy as np
import pytest

from farel.agents.dqn import DqnAgent, DqnConfig, ReplayBuffer
from farel.training import train_dqn_scalar

from mdp_fixtures import ChainEnv


def make_agent(obs_dim=5, epsilon=0.1, gamma=0.9, seed=0, **kwargs):
    return DqnAgent(
        obs_dim, 2, DqnConfig(epsilon=epsilon, gamma=gamma, **kwargs), rng=np.random.default_rng(seed)
    )


class TestAct:
    def test_epsilon_zero_always_greedy(self, rng):
        agent = make_agent(epsilon=0.0)
        obs = rng.normal(size=5)
        greedy = agent.greedy_action(obs)
        actions = {agent.act(obs, rng)[0] for _ in range(100)}
        assert actions == {greedy}

    def test_epsilon_one_uniform_frequencies(self, rng):
        agent = make_agent(epsilon=1.0)
        obs = rng.normal(size=5)
        counts = np.zeros(2)
        n = 10_000
        for _ in range(n):
            counts[agent.act(obs, rng)[0]] += 1
        chi2 = (((counts - n / 2) ** 2) / (n / 2)).sum()
        assert chi2 < 6.63  # chi-square critical value, 1 dof, alpha = 0.01

    def test_deterministic_greedy_choice(self, rng):
        agent = make_agent(epsilon=0.0)
        obs = rng.normal(size=5)
        assert len({agent.greedy_action(obs) for _ in range(10)}) == 1

    def test_distribution_is_epsilon_mixture(self, rng):
        agent = make_agent(epsilon=0.1)
        _, dist = agent.act(rng.normal(size=5), rng)
        assert sorted(dist) == pytest.approx([0.05, 0.95])
        assert sum(dist) == pytest.approx(1.0)


class TestTrainStep:
    def test_zero_gamma_consistent_batch_has_zero_loss(self, rng):
        agent = make_agent(gamma=0.0, lr=0.0)
        obs = np.zeros((4, 5))
        obs[:, 0] = 1.0
        q = agent.q_net.forward(obs[0])
        batch = (obs, np.zeros(4, dtype=int), np.full(4, q[0]), obs, np.zeros(4, dtype=bool))
        assert agent.train_step(batch) == pytest.approx(0.0, abs=1e-20)

    def test_terminal_transitions_bootstrap_zero(self, rng):
        agent = make_agent(gamma=1.0, lr=0.0)
        obs = np.zeros((2, 5))
        obs[:, 1] = 1.0
        q = agent.q_net.forward(obs[0])
        # terminal: target is just r, so loss 0 iff r equals current q
        batch = (obs, np.zeros(2, dtype=int), np.full(2, q[0]), obs, np.ones(2, dtype=bool))
        assert agent.train_step(batch) == pytest.approx(0.0, abs=1e-20)

    def test_target_net_syncs(self, rng):
        agent = make_agent(target_sync_every=2, train_start=1, batch_size=2)
        obs = rng.normal(size=(2, 5))
        batch = (obs, np.zeros(2, dtype=int), np.ones(2), obs, np.zeros(2, dtype=bool))
        agent.train_step(batch)
        before = agent.target_net.forward(obs[0]).copy()
        agent.train_step(batch)
        after = agent.target_net.forward(obs[0])
        assert not np.array_equal(before, after)


class TestReplayBuffer:
    def test_wraps_at_capacity(self, rng):
        buf = ReplayBuffer(4, 3)
        for i in range(6):
            buf.push(np.full(3, i), i % 2, float(i), np.full(3, i + 1), False)
        assert buf.size == 4
        obs, actions, rewards, next_obs, terminal = buf.sample(16, rng)
        assert rewards.min() >= 2.0  # oldest two entries were overwritten


class TestChainLearning:
    def test_reward_table_has_decision_margin(self):
        assert ChainEnv().greedy_gap(0.9) > 0.05

    def test_dqn_matches_value_iteration(self):
        env = ChainEnv()
        agent = make_agent(gamma=0.9, seed=3, train_start=100)
        train_dqn_scalar(env, agent, total_steps=8_000, seed=3)
        q_star = env.value_iteration(0.9)
        from mdp_fixtures import onehot

        greedy = [agent.greedy_action(onehot(env.schema, s).encode()) for s in range(5)]
        assert greedy == list(np.argmax(q_star, axis=1))

    def test_solved_policy_does_not_degrade(self):
        """Policy-improvement smoke test: extra training keeps the greedy policy."""
        env = ChainEnv()
        agent = make_agent(gamma=0.9, seed=3, train_start=100)
        train_dqn_scalar(env, agent, total_steps=8_000, seed=3)
        q_star = env.value_iteration(0.9)
        from mdp_fixtures import onehot

        expected = list(np.argmax(q_star, axis=1))
        for extra_round in range(3):
            train_dqn_scalar(env, agent, total_steps=2_000, seed=100 + extra_round)
            greedy = [agent.greedy_action(onehot(env.schema, s).encode()) for s in range(5)]
            assert greedy == expected


def test_save_load_round_trip(tmp_path, rng):
    agent = make_agent(seed=1)
    obs = rng.normal(size=5)
    agent.save(tmp_path / "dqn")
    loaded = DqnAgent.load(tmp_path / "dqn")
    assert loaded.greedy_action(obs) == agent.greedy_action(obs)
    assert np.array_equal(loaded.q_net.forward(obs), agent.q_net.forward(obs))
