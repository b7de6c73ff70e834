"""Agent-environment interactions and episode traces.

An Interaction is the atom every fairness computation works on: the observed
state, the individual acted upon, that individual's group memberships at the
time, the chosen action with the policy's full action distribution, the
vector reward and the optional ground-truth feedback.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .features import FeatureSchema, FeatureVector
from .objectives import RewardVector

_DIST_TOL = 1e-9


@dataclass(frozen=True)
class Interaction:
    t: int
    state: FeatureVector
    individual: FeatureVector
    groups: frozenset[str]
    action: int
    action_dist: tuple[float, ...]
    reward: RewardVector | None
    feedback: int | None
    #: timestep the feedback refers to; defaults to the interaction's own t.
    #: Delayed feedback is emitted on a later interaction referencing the
    #: earlier timestep here.
    feedback_ref: int | None = None

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("timestep must be non-negative")
        if not self.groups:
            raise ValueError("every individual belongs to at least one group")
        n_actions = len(self.action_dist)
        if abs(sum(self.action_dist) - 1.0) > _DIST_TOL:
            raise ValueError("action distribution must sum to 1")
        if not 0 <= self.action < n_actions:
            raise ValueError(f"action {self.action} outside [0, {n_actions})")
        if self.feedback is not None and not 0 <= self.feedback < n_actions:
            raise ValueError(f"feedback {self.feedback} outside [0, {n_actions})")
        if self.feedback is not None and self.feedback_ref is None:
            object.__setattr__(self, "feedback_ref", self.t)

    def with_reward(self, reward: RewardVector) -> "Interaction":
        return replace(self, reward=reward)

    def to_json(self) -> dict:
        return {
            "t": self.t,
            "state": self.state.to_json(),
            "individual": self.individual.to_json(),
            "groups": sorted(self.groups),
            "action": self.action,
            "action_dist": list(self.action_dist),
            "reward": None
            if self.reward is None
            else {"labels": list(self.reward.labels), "values": list(self.reward.values)},
            "feedback": self.feedback,
            "feedback_ref": self.feedback_ref,
        }

    @classmethod
    def from_json(
        cls, data: dict, state_schema: FeatureSchema, individual_schema: FeatureSchema
    ) -> "Interaction":
        reward = data.get("reward")
        return cls(
            t=int(data["t"]),
            state=FeatureVector.from_json(state_schema, data["state"]),
            individual=FeatureVector.from_json(individual_schema, data["individual"]),
            groups=frozenset(data["groups"]),
            action=int(data["action"]),
            action_dist=tuple(float(p) for p in data["action_dist"]),
            reward=None
            if reward is None
            else RewardVector(tuple(reward["labels"]), tuple(float(v) for v in reward["values"])),
            feedback=None if data.get("feedback") is None else int(data["feedback"]),
            feedback_ref=None if data.get("feedback_ref") is None else int(data["feedback_ref"]),
        )


@dataclass
class EpisodeTrace:
    """Ordered interactions of one episode plus its summed return vector."""

    interactions: list[Interaction]
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.interactions)

    def __iter__(self) -> Iterator[Interaction]:
        return iter(self.interactions)

    @property
    def labels(self) -> tuple[str, ...]:
        if not self.interactions:
            return ("R",)
        return self.interactions[0].reward.labels

    def episode_return(self) -> RewardVector:
        """Componentwise sum of the per-step reward vectors."""
        labels = self.labels
        total = np.zeros(len(labels), dtype=np.float64)
        for x in self.interactions:
            if x.reward.labels != labels:
                raise ValueError("inconsistent reward labels within a trace")
            total += x.reward.as_array()
        return RewardVector(labels, tuple(float(v) for v in total))


def write_trace(path, trace: EpisodeTrace, state_schema: FeatureSchema,
                individual_schema: FeatureSchema, meta: dict | None = None) -> None:
    """Write a trace as JSON lines: a header object, then one interaction per line."""
    header = {
        "format": "farel-trace",
        "version": 1,
        "state_schema": state_schema.to_json(),
        "individual_schema": individual_schema.to_json(),
        "truncated": trace.truncated,
    }
    if meta:
        header["meta"] = meta
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for x in trace:
            fh.write(json.dumps(x.to_json(), sort_keys=True) + "\n")


def read_trace(path) -> tuple[EpisodeTrace, FeatureSchema, FeatureSchema, dict]:
    """Read a JSON-lines trace; returns (trace, state schema, individual schema, meta)."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("format") != "farel-trace":
            raise ValueError(f"{path} is not a farel trace file")
        state_schema = FeatureSchema.from_json(header["state_schema"])
        individual_schema = FeatureSchema.from_json(header["individual_schema"])
        interactions = [
            Interaction.from_json(json.loads(line), state_schema, individual_schema)
            for line in fh
            if line.strip()
        ]
    trace = EpisodeTrace(interactions, truncated=bool(header.get("truncated", False)))
    return trace, state_schema, individual_schema, header.get("meta", {})
