"""Fairness notions: history in, non-positive scalar out.

Five group notions compare a confusion-matrix-derived rate between two
groups; individual fairness compares pairwise similarity against treatment
distance; the consistency-score complement measures disagreement with the
k nearest neighbours. A value of 0 means exactly fair. When a conditional
probability has an empty denominator (group absent, no ground-truth
positives, ...) the notion is undefined and reported as such; callers that
need a reward substitute 0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distances import BRAYCURTIS, DEFAULT_K, DEFAULT_LAMBDA, DISTANCE_METRICS, HEOM, PreparedBlock
from .history import FairnessHistory, WeightedConfusionMatrix, WindowSpec
from .objectives import FAIRNESS_OBJECTIVES

GROUP_NOTIONS = ("SP", "EO", "OAE", "PP", "PE")
INDIVIDUAL_NOTIONS = ("IF", "CSC")


@dataclass(frozen=True)
class FairnessValue:
    value: float
    defined: bool = True

    def or_zero(self) -> float:
        """Reward substitution: undefined notions contribute no penalty."""
        return self.value if self.defined else 0.0


_UNDEFINED = FairnessValue(0.0, defined=False)


@dataclass(frozen=True)
class NotionSpec:
    kind: str
    groups: tuple[str, str] | None = None
    distance: str = HEOM
    lam: float = DEFAULT_LAMBDA
    k: int = DEFAULT_K

    def __post_init__(self):
        if self.kind not in FAIRNESS_OBJECTIVES:
            raise ValueError(f"unknown fairness notion {self.kind!r}")
        if self.kind in GROUP_NOTIONS and (self.groups is None or len(self.groups) != 2):
            raise ValueError(f"{self.kind} requires a pair of group ids")
        if self.distance not in DISTANCE_METRICS:
            raise ValueError(f"unknown distance metric {self.distance!r}")
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        if self.k < 1:
            raise ValueError("k must be at least 1")


def total_variation(p, q) -> float:
    """Total variation distance between two discrete distributions."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    return 0.5 * float(np.abs(p - q).sum())


# -- group notions -----------------------------------------------------------


def _rate_difference(num_a, den_a, num_b, den_b) -> FairnessValue:
    if den_a <= 0 or den_b <= 0:
        return _UNDEFINED
    return FairnessValue(-abs(num_a / den_a - num_b / den_b))


def sp_from_matrices(a: WeightedConfusionMatrix, b: WeightedConfusionMatrix) -> FairnessValue:
    return _rate_difference(a.total_pos_actions, a.total, b.total_pos_actions, b.total)


def eo_from_matrices(a, b) -> FairnessValue:
    return _rate_difference(a.tp, a.tp + a.fn, b.tp, b.tp + b.fn)


def oae_from_matrices(a, b) -> FairnessValue:
    return _rate_difference(
        a.tp + a.tn, a.tp + a.fp + a.fn + a.tn, b.tp + b.tn, b.tp + b.fp + b.fn + b.tn
    )


def pp_from_matrices(a, b) -> FairnessValue:
    return _rate_difference(a.tp, a.tp + a.fp, b.tp, b.tp + b.fp)


def pe_from_matrices(a, b) -> FairnessValue:
    return _rate_difference(a.fp, a.fp + a.tn, b.fp, b.fp + b.tn)


_GROUP_FNS = {
    "SP": sp_from_matrices,
    "EO": eo_from_matrices,
    "OAE": oae_from_matrices,
    "PP": pp_from_matrices,
    "PE": pe_from_matrices,
}


def statistical_parity(h: FairnessHistory, g: str, g2: str, now: int | None = None) -> FairnessValue:
    """Difference in positive-action rate between two groups (no ground truth needed)."""
    return sp_from_matrices(h.confusion(g, now), h.confusion(g2, now))


def equal_opportunity(h, g, g2, now=None) -> FairnessValue:
    """Difference in recall tp / (tp + fn)."""
    return eo_from_matrices(h.confusion(g, now), h.confusion(g2, now))


def overall_accuracy_equality(h, g, g2, now=None) -> FairnessValue:
    """Difference in accuracy (tp + tn) / all."""
    return oae_from_matrices(h.confusion(g, now), h.confusion(g2, now))


def predictive_parity(h, g, g2, now=None) -> FairnessValue:
    """Difference in precision tp / (tp + fp)."""
    return pp_from_matrices(h.confusion(g, now), h.confusion(g2, now))


def predictive_equality(h, g, g2, now=None) -> FairnessValue:
    """Difference in false positive rate fp / (fp + tn)."""
    return pe_from_matrices(h.confusion(g, now), h.confusion(g2, now))


def confusion_from_entries(entries, group: str, now: int, spec: WindowSpec) -> WeightedConfusionMatrix:
    """Fresh weighted tallies over an interaction slice (used for suffix views)."""
    out = WeightedConfusionMatrix()
    for x in entries:
        if group not in x.groups:
            continue
        w = 1.0 if spec.kind == "sliding" else spec.gamma ** (now - x.t)
        out.add(x.action, x.feedback, w)
    return out


# -- individual notions ------------------------------------------------------


def _block_and_dists(entries, spec: NotionSpec):
    block = PreparedBlock(entries[0].individual.schema, capacity=len(entries))
    for x in entries:
        block.append(x.individual)
    return block.pairwise(spec.distance)


def individual_fairness_of(entries, spec: NotionSpec) -> FairnessValue:
    """Similarity-vs-treatment gap over every ordered pair of individuals.

    The pair term is d(i, j) - D(M_i || M_j) where D is the total variation
    distance between the two action distributions and d is the exponential
    similarity of the heterogeneous distance (or the raw Bray-Curtis value,
    which is a distance rather than a similarity; the clamp below keeps the
    result in [-1, 0] either way).
    """
    m = len(entries)
    if m < 2:
        return _UNDEFINED
    raw = _block_and_dists(entries, spec)
    if spec.distance == BRAYCURTIS:
        d = raw
    else:
        d = np.exp(-spec.lam * raw)
    dists = np.stack([np.asarray(x.action_dist, dtype=np.float64) for x in entries])
    tv = 0.5 * np.abs(dists[:, None, :] - dists[None, :, :]).sum(axis=-1)
    total = float(d.sum() - np.trace(d)) - float(tv.sum())
    n = m * (m - 1)
    return FairnessValue(min(0.0, max(-1.0, -1.0 + total / n)))


def consistency_score_complement_of(entries, spec: NotionSpec) -> FairnessValue:
    """Mean disagreement between each action and its k nearest neighbours' actions."""
    m = len(entries)
    if m < spec.k + 1:
        return _UNDEFINED
    raw = _block_and_dists(entries, spec)
    np.fill_diagonal(raw, np.inf)
    actions = np.asarray([x.action for x in entries], dtype=np.float64)
    total = 0.0
    for i in range(m):
        # stable sort on distance keeps earlier-pushed (earlier t) entries
        # first among ties
        nn = np.argsort(raw[i], kind="stable")[: spec.k]
        total += abs(actions[i] - actions[nn].sum()) / spec.k
    return FairnessValue(-total / m)


def individual_fairness(h: FairnessHistory, spec: NotionSpec, now: int | None = None) -> FairnessValue:
    return individual_fairness_of(list(h.buffer), spec)


def consistency_score_complement(h: FairnessHistory, spec: NotionSpec, now: int | None = None) -> FairnessValue:
    return consistency_score_complement_of(list(h.buffer), spec)


def evaluate(h: FairnessHistory, spec: NotionSpec, now: int | None = None) -> FairnessValue:
    """Evaluate any notion over the history's current buffer."""
    if spec.kind in GROUP_NOTIONS:
        g, g2 = spec.groups
        return _GROUP_FNS[spec.kind](h.confusion(g, now), h.confusion(g2, now))
    if spec.kind == "IF":
        return individual_fairness(h, spec, now)
    return consistency_score_complement(h, spec, now)


def evaluate_entries(entries, spec: NotionSpec, now: int, window: WindowSpec) -> FairnessValue:
    """Evaluate any notion over an arbitrary interaction slice."""
    if spec.kind in GROUP_NOTIONS:
        g, g2 = spec.groups
        return _GROUP_FNS[spec.kind](
            confusion_from_entries(entries, g, now, window),
            confusion_from_entries(entries, g2, now, window),
        )
    if spec.kind == "IF":
        return individual_fairness_of(entries, spec)
    return consistency_score_complement_of(entries, spec)
