"""Objective labels and vector rewards.

Every reward in this package is a vector: the scalar performance reward plus
one entry per fairness objective, always kept in one canonical order so that
returns, coverage sets and output tables line up without bookkeeping.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Canonical objective order: performance reward first, then the group
#: fairness objectives, then the individual ones.
CANONICAL_OBJECTIVES = ("R", "SP", "EO", "OAE", "PP", "PE", "IF", "CSC")

#: Objectives that are fairness notions (everything except the reward).
FAIRNESS_OBJECTIVES = CANONICAL_OBJECTIVES[1:]

_RANK = {label: i for i, label in enumerate(CANONICAL_OBJECTIVES)}


def canonical_order(labels) -> tuple[str, ...]:
    """Sort objective labels into canonical order, rejecting unknown names."""
    labels = list(labels)
    for label in labels:
        if label not in _RANK:
            raise ValueError(f"unknown objective label: {label!r}")
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate objective labels in {labels!r}")
    return tuple(sorted(labels, key=_RANK.__getitem__))


@dataclass(frozen=True)
class RewardVector:
    """Values for a fixed subsequence of the canonical objectives."""

    labels: tuple[str, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.values):
            raise ValueError("labels and values must have equal length")
        if self.labels != canonical_order(self.labels):
            raise ValueError(f"labels {self.labels!r} are not in canonical order")

    def __getitem__(self, label: str) -> float:
        return self.values[self.labels.index(label)]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


def assemble_reward(perf: float, fairness_values: dict[str, float]) -> RewardVector:
    """Pack the performance reward and per-notion values into a RewardVector.

    ``fairness_values`` maps fairness labels to scalars; the result is ordered
    canonically with R first. Duplicate or unknown labels are rejected.
    """
    if "R" in fairness_values:
        raise ValueError("'R' is the performance reward, not a fairness label")
    labels = canonical_order(["R", *fairness_values])
    values = tuple(float(perf) if l == "R" else float(fairness_values[l]) for l in labels)
    return RewardVector(labels, values)
