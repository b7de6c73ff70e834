"""Interaction histories with sliding-window or discounted semantics.

The sliding variant is a plain FIFO of the newest ``window`` interactions,
all weighted 1. The discounted variant keeps a growing buffer in which an
interaction aged ``a`` steps weighs ``gamma ** a`` (the newest always weighs
1), plus a threshold/delay rule that truncates the buffer down to the newest
``window`` interactions once the guiding fairness value has been stable for
``delay`` consecutive steps.

Per-group confusion statistics are maintained incrementally: pushing at time
t scales every cached tally by ``gamma ** (t - t_prev)`` and adds the new
interaction at weight 1. Caches are refreshed from the buffer periodically so
float drift stays far below the 1e-12 the equivalence tests demand.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field, replace

logger = logging.getLogger(__name__)

SLIDING = "sliding"
DISCOUNTED = "discounted"

_REFRESH_EVERY = 1024


@dataclass(frozen=True)
class WindowSpec:
    kind: str
    window: int
    gamma: float = 1.0
    threshold: float = 1e-4
    delay: int = 50

    def __post_init__(self):
        if self.kind not in (SLIDING, DISCOUNTED):
            raise ValueError(f"unknown history kind {self.kind!r}")
        if self.window < 1:
            raise ValueError("window must be at least 1")
        if self.kind == DISCOUNTED:
            if not 0.0 < self.gamma <= 1.0:
                raise ValueError("gamma must lie in (0, 1]")
            if self.threshold <= 0:
                raise ValueError("threshold must be positive")
            if self.delay < 1:
                raise ValueError("delay must be at least 1")

    def to_json(self) -> dict:
        if self.kind == SLIDING:
            return {"kind": self.kind, "window": self.window}
        return {
            "kind": self.kind,
            "window": self.window,
            "gamma": self.gamma,
            "threshold": self.threshold,
            "delay": self.delay,
        }

    @classmethod
    def from_json(cls, data: dict) -> "WindowSpec":
        return cls(**data)


@dataclass
class WeightedConfusionMatrix:
    """Weighted tallies of action vs feedback for one group.

    tp/fp/fn/tn only count interactions that carry feedback; the action-rate
    tallies (positive actions and total) count every interaction of the group
    so notions that need no ground truth can still be computed.
    """

    tp: float = 0.0
    fp: float = 0.0
    fn: float = 0.0
    tn: float = 0.0
    total_pos_actions: float = 0.0
    total: float = 0.0

    def scaled(self, factor: float) -> "WeightedConfusionMatrix":
        return WeightedConfusionMatrix(
            self.tp * factor,
            self.fp * factor,
            self.fn * factor,
            self.tn * factor,
            self.total_pos_actions * factor,
            self.total * factor,
        )

    def add(self, action: int, feedback: int | None, weight: float) -> None:
        self.total += weight
        if action == 1:
            self.total_pos_actions += weight
        if feedback is None:
            return
        if action == 1 and feedback == 1:
            self.tp += weight
        elif action == 1 and feedback == 0:
            self.fp += weight
        elif action == 0 and feedback == 1:
            self.fn += weight
        else:
            self.tn += weight

    def subtract(self, action: int, feedback: int | None, weight: float) -> None:
        self.add(action, feedback, -weight)


class FairnessHistory:
    """Ordered interaction store with weights and per-group confusion caches."""

    def __init__(self, spec: WindowSpec):
        self.spec = spec
        self.buffer: deque = deque()
        self.stable_count = 0
        self._caches: dict[str, WeightedConfusionMatrix] = {}
        self._cache_time: int | None = None
        self._pushes_since_refresh = 0

    def __len__(self) -> int:
        return len(self.buffer)

    @property
    def now(self) -> int:
        """Timestep of the newest interaction (-1 when empty)."""
        return self.buffer[-1].t if self.buffer else -1

    def push(self, x) -> None:
        """Append an interaction; evict FIFO when a sliding window overflows."""
        if self.buffer and x.t <= self.buffer[-1].t:
            raise ValueError(
                f"timesteps must be strictly increasing (got {x.t} after {self.buffer[-1].t})"
            )
        self._decay_caches(x.t)
        self.buffer.append(x)
        for g in x.groups:
            self._caches.setdefault(g, WeightedConfusionMatrix()).add(x.action, x.feedback, 1.0)
        if self.spec.kind == SLIDING and len(self.buffer) > self.spec.window:
            old = self.buffer.popleft()
            self._remove_from_caches(old)
        self._pushes_since_refresh += 1
        if self._pushes_since_refresh >= _REFRESH_EVERY:
            self._refresh_caches()

    def weight_of(self, x, now: int) -> float:
        """Contribution weight of a buffered interaction at time ``now``."""
        if self.spec.kind == SLIDING:
            return 1.0
        return self.spec.gamma ** (now - x.t)

    def prune(self, guiding_fairness_delta: float) -> bool:
        """Apply the threshold/delay truncation rule; returns True on truncation.

        The delta is how much the guiding fairness notion changes when the
        history is reduced to its newest ``window`` interactions. Stability
        for ``delay`` consecutive steps truncates the buffer to those newest
        ``window`` interactions and resets the stability counter.
        """
        if self.spec.kind == SLIDING:
            logger.warning("prune called on a sliding history; ignoring")
            return False
        if abs(guiding_fairness_delta) < self.spec.threshold:
            self.stable_count += 1
        else:
            self.stable_count = 0
        if self.stable_count < self.spec.delay:
            return False
        self.stable_count = 0
        excess = len(self.buffer) - self.spec.window
        if excess <= 0:
            return False
        for _ in range(excess):
            self.buffer.popleft()
        self._refresh_caches()
        return True

    def confusion(self, group: str, now: int | None = None) -> WeightedConfusionMatrix:
        """Weighted confusion tallies for one group as of time ``now``."""
        if now is None:
            now = self.now
        cached = self._caches.get(group)
        if cached is None:
            return WeightedConfusionMatrix()
        if self.spec.kind == SLIDING or self._cache_time is None or now == self._cache_time:
            return cached.scaled(1.0)
        if now < self._cache_time:
            raise ValueError("confusion queried before the newest interaction")
        return cached.scaled(self.spec.gamma ** (now - self._cache_time))

    def groups(self) -> tuple[str, ...]:
        return tuple(sorted(self._caches))

    def newest(self, count: int) -> list:
        """The newest ``count`` interactions, oldest first."""
        if count >= len(self.buffer):
            return list(self.buffer)
        return list(self.buffer)[len(self.buffer) - count :]

    # -- cache maintenance -------------------------------------------------

    def _decay_caches(self, new_time: int) -> None:
        if self.spec.kind == SLIDING:
            self._cache_time = new_time
            return
        if self._cache_time is not None and self.spec.gamma < 1.0:
            factor = self.spec.gamma ** (new_time - self._cache_time)
            for cache in self._caches.values():
                cache.tp *= factor
                cache.fp *= factor
                cache.fn *= factor
                cache.tn *= factor
                cache.total_pos_actions *= factor
                cache.total *= factor
        self._cache_time = new_time

    def _remove_from_caches(self, x) -> None:
        weight = self.weight_of(x, self._cache_time)
        for g in x.groups:
            self._caches[g].subtract(x.action, x.feedback, weight)

    def _refresh_caches(self) -> None:
        """Recompute every cache directly from the buffer."""
        self._pushes_since_refresh = 0
        now = self._cache_time if self._cache_time is not None else self.now
        caches: dict[str, WeightedConfusionMatrix] = {g: WeightedConfusionMatrix() for g in self._caches}
        for x in self.buffer:
            w = self.weight_of(x, now)
            for g in x.groups:
                caches.setdefault(g, WeightedConfusionMatrix()).add(x.action, x.feedback, w)
        self._caches = caches
