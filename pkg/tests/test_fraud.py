import math

import numpy as np
import pytest

from farel.engine import FairnessEngine
from farel.episode import run_episode
from farel.envs.fraud import (
    AUTHENTICATE,
    CONTINENTS,
    IGNORE,
    FraudBiasSpec,
    FraudEnv,
    FraudGenSpec,
    Transaction,
    feedback_rule,
)
from farel.history import SLIDING, WindowSpec
from farel.notions import NotionSpec


def txn(continent="A", merchant=0, fraud=False):
    return Transaction(
        card_id=1, merchant_id=merchant, currency="EUR", continent=continent,
        amount=10.0, day=0, hour=12, is_fraud=fraud,
    )


class ConstantPolicy:
    def __init__(self, action):
        self.action = action
        self.dist = (1.0, 0.0) if action == IGNORE else (0.0, 1.0)

    def act(self, obs, rng):
        return self.action, self.dist


def engine_for(env, notions=None):
    notions = notions if notions is not None else [
        NotionSpec("SP", groups=("continent:A", "continent:B")),
        NotionSpec("EO", groups=("continent:A", "continent:B")),
    ]
    return FairnessEngine(notions, WindowSpec(SLIDING, 200), env.individual_schema)


class TestGenSpec:
    def test_residual_rate_solves_overall_target(self):
        spec = FraudGenSpec()
        rates = spec.fraud_rates()
        assert rates[0] == 0.44 and rates[1] == 0.73
        implied = sum(p * r for p, r in zip(spec.continent_probs, rates))
        assert implied == pytest.approx(spec.fraud_rate)

    def test_inconsistent_rates_rejected(self):
        with pytest.raises(ValueError):
            FraudGenSpec(fraud_rate=0.01).fraud_rates()

    def test_probs_must_sum_to_one(self):
        with pytest.raises(ValueError):
            FraudGenSpec(continent_probs=(0.5, 0.5, 0.5))


class TestGeneration:
    def test_zero_fraud_rate(self):
        spec = FraudGenSpec(fraud_rate=0.0, continent_fraud=(0.0, 0.0, None))
        env = FraudEnv(spec)
        env.reset(seed=0)
        for _ in range(300):
            assert not env.txn.is_fraud
            result = env.step(IGNORE)
            if result.terminated:
                break

    def test_overall_and_conditional_fraud_rates(self):
        spec = FraudGenSpec(episode_cap=100_000, hours=20_000, arrivals_per_hour=6.0,
                            n_customers=2000)
        env = FraudEnv(spec)
        env.reset(seed=42)
        counts = {c: [0, 0] for c in CONTINENTS}  # [transactions, frauds]
        n = 0
        while n < 100_000 and env.txn is not None:
            t = env.txn
            counts[t.continent][0] += 1
            counts[t.continent][1] += t.is_fraud
            result = env.step(IGNORE)
            n += 1
            if result.terminated:
                break
        total = sum(c[0] for c in counts.values())
        frauds = sum(c[1] for c in counts.values())
        sigma = math.sqrt(total * 0.10 * 0.90)
        assert abs(frauds - 0.10 * total) <= 3 * sigma
        for cont, rate in zip(CONTINENTS[:2], (0.44, 0.73)):
            n_c, f_c = counts[cont]
            sigma_c = math.sqrt(n_c * rate * (1 - rate))
            assert abs(f_c - rate * n_c) <= 3 * sigma_c, cont

    def test_continent_shares_match_spec(self):
        spec = FraudGenSpec(episode_cap=50_000, hours=10_000, n_customers=5000)
        env = FraudEnv(spec)
        env.reset(seed=7)
        counts = {c: 0 for c in CONTINENTS}
        n = 0
        while n < 50_000 and env.txn is not None:
            counts[env.txn.continent] += 1
            if env.step(IGNORE).terminated:
                break
            n += 1
        total = sum(counts.values())
        for cont, p in zip(CONTINENTS, spec.continent_probs):
            sigma = math.sqrt(total * p * (1 - p))
            # customer-pool sampling adds variance beyond the multinomial
            # bound, so allow a wider corridor
            assert abs(counts[cont] - p * total) <= 6 * sigma + 0.01 * total, cont


class TestProcess:
    def test_reward_cases(self):
        env = FraudEnv()
        env.reset(seed=0)
        genuine = txn(fraud=False)
        fraud = txn(fraud=True)
        customer = env.customers[0]
        customer.satisfaction = 1.0
        assert env._process(genuine, customer, AUTHENTICATE)[0] == 1.0
        assert env._process(fraud, customer, AUTHENTICATE)[0] == -1.0
        assert env._process(genuine, customer, IGNORE)[0] == 0.0
        assert env._process(fraud, customer, IGNORE)[0] == 0.0

    def test_satisfaction_decay_and_cancellation(self):
        spec = FraudGenSpec(satisfaction_decay=0.4, leave_threshold=0.25)
        env = FraudEnv(spec)
        env.reset(seed=0)
        customer = env.customers[0]
        reward, cancelled = env._process(txn(), customer, AUTHENTICATE)
        assert (reward, cancelled) == (1.0, False)
        assert customer.satisfaction == pytest.approx(0.6)
        reward, cancelled = env._process(txn(), customer, AUTHENTICATE)
        assert (reward, cancelled) == (-1.0, True)
        assert not customer.active

    def test_satisfaction_stays_in_unit_interval(self):
        spec = FraudGenSpec(satisfaction_decay=0.9, leave_threshold=0.0)
        env = FraudEnv(spec)
        env.reset(seed=0)
        customer = env.customers[0]
        for _ in range(5):
            env._process(txn(), customer, AUTHENTICATE)
            assert 0.0 <= customer.satisfaction <= 1.0

    def test_bias_applies_to_authentications_in_scope(self):
        env = FraudEnv(bias=FraudBiasSpec("continent_a", 0.1))
        env.reset(seed=0)
        customer = env.customers[0]
        customer.satisfaction = 1.0
        assert env._process(txn("A"), customer, AUTHENTICATE)[0] == pytest.approx(1.1)
        assert env._process(txn("B"), customer, AUTHENTICATE)[0] == 1.0
        assert env._process(txn("A"), customer, IGNORE)[0] == 0.0

    def test_merchant_scoped_bias(self):
        bias = FraudBiasSpec("continent_a_merchant0", 0.1)
        assert bias.matches(txn("A", merchant=0))
        assert not bias.matches(txn("A", merchant=1))
        assert not bias.matches(txn("B", merchant=0))


class TestFeedbackRule:
    def test_authenticated_genuine_reveals_ignore(self):
        assert feedback_rule(txn(fraud=False), AUTHENTICATE) == IGNORE

    def test_authenticated_fraud_reveals_authenticate(self):
        assert feedback_rule(txn(fraud=True), AUTHENTICATE) == AUTHENTICATE

    def test_ignored_gives_no_feedback(self):
        assert feedback_rule(txn(fraud=False), IGNORE) is None
        assert feedback_rule(txn(fraud=True), IGNORE) is None


class TestEpisodes:
    def test_feedback_present_iff_authenticated(self):
        env = FraudEnv()

        class Alternating:
            def act(self, obs, rng):
                a = int(rng.random() < 0.5)
                return a, ((1.0, 0.0) if a == 0 else (0.0, 1.0))

        trace = run_episode(env, Alternating(), engine_for(env), 300, seed=3)
        for x in trace:
            assert (x.feedback is not None) == (x.action == AUTHENTICATE)

    def test_never_authenticate_gives_zero_return_and_no_confusion(self):
        env = FraudEnv()
        engine = engine_for(env)
        trace = run_episode(env, ConstantPolicy(IGNORE), engine, 500, seed=5)
        assert trace.episode_return()["R"] == 0.0
        # EO undefined everywhere: no ground truth was ever revealed
        assert all(x.reward["EO"] == 0.0 for x in trace)
        for group in ("continent:A", "continent:B"):
            m = engine.history.confusion(group)
            assert m.tp + m.fp + m.fn + m.tn == 0

    def test_episode_cap_respected(self):
        spec = FraudGenSpec(episode_cap=120)
        env = FraudEnv(spec)
        trace = run_episode(env, ConstantPolicy(IGNORE), engine_for(env), 1000, seed=1)
        assert len(trace) <= 120

    def test_heavy_authentication_drives_customers_away(self):
        spec = FraudGenSpec(satisfaction_decay=0.3, leave_threshold=0.5, n_customers=20,
                            episode_cap=2000, hours=400)
        env = FraudEnv(spec)
        run_episode(env, ConstantPolicy(AUTHENTICATE), engine_for(env), 2000, seed=2)
        assert env.cancellations > 0
        assert not any(c.active for c in env.customers)

    def test_determinism(self):
        a = run_episode(FraudEnv(), ConstantPolicy(IGNORE), engine_for(FraudEnv()), 100, seed=11)
        b = run_episode(FraudEnv(), ConstantPolicy(IGNORE), engine_for(FraudEnv()), 100, seed=11)
        assert [x.to_json() for x in a] == [x.to_json() for x in b]

    def test_describe(self):
        desc = FraudEnv().describe()
        assert desc["scenario"] == "fraud"
        assert desc["continent_fraud_rates"][0] == pytest.approx(0.44)
        assert desc["episode_cap"] == 1000
