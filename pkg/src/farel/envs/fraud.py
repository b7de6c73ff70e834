"""Fraud-detection environment: flag transactions without burdening customers.

A synthetic per-hour transaction stream over a pool of customers spread
across continents with distinct fraud base rates. Authenticating a genuine
transaction succeeds (+1) but costs customer satisfaction; authenticating a
fraudulent one blocks it (-1, fraudsters cannot pass a second authentication
step); ignoring pays nothing. Ground truth is revealed only for authenticated
transactions. Customers whose satisfaction falls below the leave threshold
abandon their transaction and stop transacting, logged as cancellations.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..episode import StepResult
from ..features import NOMINAL, NUMERIC, FeatureSchema, FeatureVector

logger = logging.getLogger(__name__)

IGNORE, AUTHENTICATE = 0, 1

CONTINENTS = ("A", "B", "C")
CURRENCIES = ("EUR", "USD", "GBP")
_CONTINENT_CURRENCY = {"A": "EUR", "B": "USD", "C": "GBP"}


@dataclass(frozen=True)
class FraudBiasSpec:
    """Extra reward granted when authenticating transactions in the bias scope."""

    kind: str = "none"
    amount: float = 0.1

    _KINDS = ("none", "continent_a", "continent_a_merchant0")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown bias kind {self.kind!r}")

    def matches(self, txn: "Transaction") -> bool:
        if self.kind == "continent_a":
            return txn.continent == "A"
        if self.kind == "continent_a_merchant0":
            return txn.continent == "A" and txn.merchant_id == 0
        return False


@dataclass(frozen=True)
class FraudGenSpec:
    """Transaction generator parameters.

    The fraud rate of the residual continent is solved from the overall
    target rate so the first two continents can keep their fixed conditional
    rates while the stream as a whole hits ``fraud_rate``.
    """

    fraud_rate: float = 0.10
    continent_probs: tuple[float, ...] = (0.12, 0.05, 0.83)
    continent_fraud: tuple[float | None, ...] = (0.44, 0.73, None)
    n_customers: int = 200
    n_merchants: int = 5
    arrivals_per_hour: float = 6.0
    hours: int = 168  # one week
    satisfaction_decay: float = 0.05
    leave_threshold: float = 0.25
    episode_cap: int = 1000
    amount_log_mean: float = 3.0
    amount_log_sd: float = 1.0
    amount_max: float = 500.0

    def __post_init__(self):
        if abs(sum(self.continent_probs) - 1.0) > 1e-9:
            raise ValueError("continent probabilities must sum to 1")
        if len(self.continent_probs) != len(CONTINENTS):
            raise ValueError(f"expected {len(CONTINENTS)} continent probabilities")

    def fraud_rates(self) -> tuple[float, ...]:
        """Per-continent fraud rates, with None entries solved from the target."""
        fixed = sum(
            p * r for p, r in zip(self.continent_probs, self.continent_fraud) if r is not None
        )
        free = sum(p for p, r in zip(self.continent_probs, self.continent_fraud) if r is None)
        if free == 0:
            return tuple(float(r) for r in self.continent_fraud)
        residual = (self.fraud_rate - fixed) / free
        if not 0.0 <= residual <= 1.0:
            raise ValueError(
                f"continent fraud rates are inconsistent with the overall rate "
                f"(residual {residual:.4f} outside [0, 1])"
            )
        return tuple(residual if r is None else float(r) for r in self.continent_fraud)


@dataclass(frozen=True)
class Transaction:
    card_id: int
    merchant_id: int
    currency: str
    continent: str
    amount: float
    day: int
    hour: int
    is_fraud: bool

    def groups(self) -> frozenset[str]:
        return frozenset({f"continent:{self.continent}"})


@dataclass
class Customer:
    card_id: int
    continent: str
    satisfaction: float = 1.0
    active: bool = True


def feedback_rule(txn: Transaction, action: int) -> int | None:
    """Ground truth revealed only for authenticated transactions.

    The correct action is to authenticate exactly the fraudulent ones, so an
    authenticated genuine transaction reveals "ignore was correct".
    """
    if action != AUTHENTICATE:
        return None
    return AUTHENTICATE if txn.is_fraud else IGNORE


def transaction_schema(spec: FraudGenSpec) -> FeatureSchema:
    return FeatureSchema(
        names=("card_id", "merchant_id", "currency", "continent", "amount", "day", "hour"),
        kinds=(NOMINAL, NOMINAL, NOMINAL, NOMINAL, NUMERIC, NUMERIC, NUMERIC),
        sensitive=(False, False, False, True, False, False, False),
        bounds=(None, None, None, None, (0.0, spec.amount_max), (0.0, 6.0), (0.0, 23.0)),
        levels=(spec.n_customers, spec.n_merchants, len(CURRENCIES), len(CONTINENTS), None, None, None),
    )


def fraud_state_schema(spec: FraudGenSpec) -> FeatureSchema:
    txn = transaction_schema(spec)
    return FeatureSchema(
        names=("genuine_fraud_ratio", "avg_satisfaction", *txn.names),
        kinds=(NUMERIC, NUMERIC, *txn.kinds),
        sensitive=(False, False, *txn.sensitive),
        bounds=((0.0, 1.0), (0.0, 1.0), *txn.bounds),
        levels=(None, None, *txn.levels),
    )


def transaction_vector(schema: FeatureSchema, txn: Transaction) -> FeatureVector:
    return FeatureVector(
        schema,
        numeric=(txn.amount, float(txn.day), float(txn.hour)),
        nominal=(
            txn.card_id,
            txn.merchant_id,
            CURRENCIES.index(txn.currency),
            CONTINENTS.index(txn.continent),
        ),
    )


class FraudEnv:
    """Per-transaction authenticate/ignore decisions over a simulated week."""

    n_actions = 2

    def __init__(self, spec: FraudGenSpec | None = None, bias: FraudBiasSpec | None = None):
        self.spec = spec or FraudGenSpec()
        self.bias = bias or FraudBiasSpec()
        self.state_schema = fraud_state_schema(self.spec)
        self.individual_schema = transaction_schema(self.spec)
        self._rates = self.spec.fraud_rates()
        self._rng: np.random.Generator | None = None

    @property
    def horizon(self) -> int:
        return self.spec.episode_cap

    def reset(self, seed: int) -> FeatureVector:
        self._rng = np.random.default_rng(seed)
        spec = self.spec
        continents = self._rng.choice(
            len(CONTINENTS), size=spec.n_customers, p=np.asarray(spec.continent_probs)
        )
        self.customers = [
            Customer(card_id=i, continent=CONTINENTS[int(c)]) for i, c in enumerate(continents)
        ]
        self._active = list(self.customers)
        self._sat_sum = float(len(self._active))
        self._schedule = self._arrival_schedule()
        self._cursor = 0
        self._genuine_seen = 0
        self._fraud_seen = 0
        self.cancellations = 0
        self._done = False
        self._next_transaction()
        return self._state_vector()

    def _arrival_schedule(self) -> list[tuple[int, int]]:
        """(day, hour) of each arrival over the week, capped at the episode limit."""
        spec = self.spec
        counts = self._rng.poisson(spec.arrivals_per_hour, size=spec.hours)
        schedule = [
            (h // 24, h % 24) for h, count in enumerate(counts) for _ in range(int(count))
        ]
        return schedule[: spec.episode_cap]

    def _next_transaction(self) -> None:
        active = self._active
        if self._cursor >= len(self._schedule) or not active:
            self._done = True
            self.txn = None
            return
        day, hour = self._schedule[self._cursor]
        self._cursor += 1
        rng = self._rng
        customer = active[int(rng.integers(len(active)))]
        continent = customer.continent
        rate = self._rates[CONTINENTS.index(continent)]
        is_fraud = bool(rng.random() < rate)
        amount = float(
            min(self.spec.amount_max, rng.lognormal(self.spec.amount_log_mean, self.spec.amount_log_sd))
        )
        self.txn = Transaction(
            card_id=customer.card_id,
            merchant_id=int(rng.integers(self.spec.n_merchants)),
            currency=_CONTINENT_CURRENCY[continent],
            continent=continent,
            amount=amount,
            day=day,
            hour=hour,
            is_fraud=is_fraud,
        )
        self._customer = customer

    def _company_state(self) -> tuple[float, float]:
        seen = self._genuine_seen + self._fraud_seen
        ratio = self._genuine_seen / seen if seen else 1.0
        avg_sat = self._sat_sum / len(self._active) if self._active else 0.0
        return ratio, avg_sat

    def _state_vector(self) -> FeatureVector:
        ratio, avg_sat = self._company_state()
        if self.txn is None:
            # terminal padding state: repeat the company features with a null txn
            return FeatureVector(
                self.state_schema, numeric=(ratio, avg_sat, 0.0, 0.0, 0.0), nominal=(0, 0, 0, 0)
            )
        txn_fv = transaction_vector(self.individual_schema, self.txn)
        return FeatureVector(
            self.state_schema,
            numeric=(ratio, avg_sat, *txn_fv.numeric),
            nominal=txn_fv.nominal,
        )

    def step(self, action: int) -> StepResult:
        if self._rng is None:
            raise RuntimeError("call reset(seed) before step")
        if self._done or self.txn is None:
            raise RuntimeError("episode has terminated")
        txn, customer = self.txn, self._customer
        reward, cancelled = self._process(txn, customer, action)
        correct = feedback_rule(txn, action)
        if txn.is_fraud:
            self._fraud_seen += 1
        else:
            self._genuine_seen += 1
        if cancelled:
            self.cancellations += 1
            logger.debug("transaction cancelled: card %d left at satisfaction %.3f",
                         customer.card_id, customer.satisfaction)
        individual = transaction_vector(self.individual_schema, txn)
        self._next_transaction()
        return StepResult(
            next_state=self._state_vector(),
            perf_reward=reward,
            feedback=correct,
            individual=individual,
            groups=txn.groups(),
            terminated=self._done,
        )

    def _process(self, txn: Transaction, customer: Customer, action: int) -> tuple[float, bool]:
        """Reward cases plus satisfaction dynamics; returns (reward, cancelled)."""
        cancelled = False
        if action == AUTHENTICATE:
            if txn.is_fraud:
                reward = -1.0
            else:
                before = customer.satisfaction
                customer.satisfaction = max(0.0, before - self.spec.satisfaction_decay)
                self._sat_sum -= before - customer.satisfaction
                if customer.satisfaction < self.spec.leave_threshold:
                    customer.active = False
                    self._active.remove(customer)
                    self._sat_sum -= customer.satisfaction
                    cancelled = True
                    reward = -1.0
                else:
                    reward = 1.0
        else:
            reward = 0.0
        if action == AUTHENTICATE and self.bias.matches(txn):
            reward += self.bias.amount
        return reward, cancelled

    def describe(self) -> dict:
        spec = self.spec
        return {
            "scenario": "fraud",
            "actions": {"0": "ignore", "1": "authenticate"},
            "fraud_rate": spec.fraud_rate,
            "continents": list(CONTINENTS),
            "continent_probs": list(spec.continent_probs),
            "continent_fraud_rates": [round(r, 6) for r in spec.fraud_rates()],
            "n_customers": spec.n_customers,
            "n_merchants": spec.n_merchants,
            "arrivals_per_hour": spec.arrivals_per_hour,
            "hours": spec.hours,
            "satisfaction_decay": spec.satisfaction_decay,
            "leave_threshold": spec.leave_threshold,
            "episode_cap": spec.episode_cap,
            "bias": {"kind": self.bias.kind, "amount": self.bias.amount},
            "groups": [f"continent:{c}" for c in CONTINENTS],
        }
