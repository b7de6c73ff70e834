"""Coverage sets over policy return vectors and their presentation helpers.

All objectives are maximised: a point dominates another when it is at least
as good everywhere and strictly better somewhere. Representative subsets keep
the per-objective maximisers and fill up greedily with the mutually most
distant remaining points in normalised objective space.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

#: reward maxima observed for the shipped scenarios; used as normalisation
#: anchors so a maximal-reward policy maps to 0
DEFAULT_REWARD_MAX = {"hiring": 46.53243, "fraud": 906.0}


@dataclass(frozen=True)
class PolicyPoint:
    returns: tuple[float, ...]
    seed: int = 0
    provenance: dict = field(default_factory=dict, compare=False)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.returns, dtype=np.float64)


@dataclass(frozen=True)
class NormalizationSpec:
    """Per-objective anchors mapping the best value to 0 on every axis."""

    labels: tuple[str, ...]
    reward_max: float
    #: per-fairness-objective divisor (the run-wide minimum, made positive)
    fairness_scale: dict[str, float] = field(default_factory=dict)


def dominates(a, b) -> bool:
    """True when a is at least as good everywhere and better somewhere."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return bool(np.all(a >= b) and np.any(a > b))


def _dominated_mask(returns: np.ndarray) -> np.ndarray:
    """dominated[i] is True when some j has returns[j] >= returns[i] with a strict part."""
    # ge[i, j]: j is at least as good as i everywhere; gt[i, j]: j beats i somewhere
    ge = np.all(returns[:, None, :] <= returns[None, :, :], axis=2)
    gt = np.any(returns[:, None, :] < returns[None, :, :], axis=2)
    return np.any(ge & gt, axis=1)


def nondominated(points: list[PolicyPoint]) -> list[PolicyPoint]:
    """The points no other point dominates; equal vectors are kept once."""
    unique: list[PolicyPoint] = []
    seen = set()
    for p in points:
        if p.returns not in seen:
            seen.add(p.returns)
            unique.append(p)
    if not unique:
        return []
    dominated = _dominated_mask(np.stack([p.as_array() for p in unique]))
    return [p for p, d in zip(unique, dominated) if not d]


def nondominated_fronts(returns: np.ndarray) -> list[list[int]]:
    """Indices grouped into successive non-dominated fronts (best first)."""
    remaining = np.arange(len(returns))
    fronts: list[list[int]] = []
    while remaining.size:
        dominated = _dominated_mask(returns[remaining])
        if dominated.all():  # only equal duplicates left: close them out together
            dominated[:] = False
        fronts.append([int(i) for i in remaining[~dominated]])
        remaining = remaining[dominated]
    return fronts


def crowding_distance(returns: np.ndarray) -> np.ndarray:
    """NSGA-II style crowding distance within one front."""
    n, k = returns.shape
    if n <= 2:
        return np.full(n, np.inf)
    crowding = np.zeros(n)
    for obj in range(k):
        order = np.argsort(returns[:, obj], kind="stable")
        spread = returns[order[-1], obj] - returns[order[0], obj]
        crowding[order[0]] = crowding[order[-1]] = np.inf
        if spread <= 0:
            continue
        for pos in range(1, n - 1):
            crowding[order[pos]] += (
                returns[order[pos + 1], obj] - returns[order[pos - 1], obj]
            ) / spread
    return crowding


def _minmax_normalise(arrays: np.ndarray) -> np.ndarray:
    lo = arrays.min(axis=0)
    hi = arrays.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    return (arrays - lo) / span


def representative_subset(points: list[PolicyPoint], m: int = 10, rng: np.random.Generator | None = None) -> list[PolicyPoint]:
    """At most m points: every per-objective argmax plus max-min-distance fills.

    Greedy fill maximises the minimum Euclidean distance to the already
    selected points, computed on min-max normalised objectives; exact ties are
    broken by the provided rng (first index when rng is None).
    """
    if len(points) <= m:
        return list(points)
    if rng is None:
        rng = np.random.default_rng(0)
    arrays = np.stack([p.as_array() for p in points])
    selected: list[int] = []
    for obj in range(arrays.shape[1]):
        best = int(np.argmax(arrays[:, obj]))  # ties resolve to the first
        if best not in selected:
            selected.append(best)
    selected = selected[:m]
    normalised = _minmax_normalise(arrays)
    remaining = [i for i in range(len(points)) if i not in selected]
    while len(selected) < m and remaining:
        chosen = np.stack([normalised[i] for i in selected])
        min_dists = np.array(
            [np.sqrt(((chosen - normalised[i]) ** 2).sum(axis=1)).min() for i in remaining]
        )
        best_dist = min_dists.max()
        candidates = [i for i, d in zip(remaining, min_dists) if d == best_dist]
        pick = candidates[int(rng.integers(len(candidates)))] if len(candidates) > 1 else candidates[0]
        selected.append(pick)
        remaining.remove(pick)
    return [points[i] for i in selected]


def normalize(points: list[PolicyPoint], spec: NormalizationSpec) -> list[PolicyPoint]:
    """Map returns so every axis tops out at 0.

    The reward axis becomes (R - R_max) / |R_max|; each fairness axis is
    divided by the magnitude of its run-wide minimum so it spans [-1, 0].
    Axes that are identically zero stay zero.
    """
    out = []
    for p in points:
        values = []
        for label, value in zip(spec.labels, p.returns):
            if label == "R":
                values.append((value - spec.reward_max) / abs(spec.reward_max))
            else:
                scale = abs(spec.fairness_scale.get(label, 0.0))
                values.append(value / scale if scale > 0 else 0.0)
        out.append(PolicyPoint(tuple(values), seed=p.seed, provenance=p.provenance))
    return out


def normalization_from_points(labels, points, reward_max: float) -> NormalizationSpec:
    """Build a spec whose fairness divisors are the run-wide minima."""
    scale = {}
    if points:
        arrays = np.stack([p.as_array() for p in points])
        for j, label in enumerate(labels):
            if label != "R":
                scale[label] = abs(float(arrays[:, j].min()))
    return NormalizationSpec(tuple(labels), reward_max, scale)


@dataclass(frozen=True)
class SummaryRow:
    seed: str  # seed number or "All"
    statistic: str  # "mean" or "std"
    values: tuple[float, ...]
    degenerate: bool = False  # std over a single point


def summarize(points: list[PolicyPoint]) -> list[SummaryRow]:
    """Per-seed mean and sample std rows plus pooled "All" rows."""
    rows: list[SummaryRow] = []
    by_seed: dict[int, list[PolicyPoint]] = {}
    for p in points:
        by_seed.setdefault(p.seed, []).append(p)

    def stat_rows(label, group):
        arrays = np.stack([p.as_array() for p in group])
        mean = arrays.mean(axis=0)
        if len(group) > 1:
            std = arrays.std(axis=0, ddof=1)
            degenerate = False
        else:
            std = np.zeros(arrays.shape[1])
            degenerate = True
        rows.append(SummaryRow(label, "mean", tuple(float(v) for v in mean)))
        rows.append(SummaryRow(label, "std", tuple(float(v) for v in std), degenerate=degenerate))

    for seed in sorted(by_seed):
        stat_rows(str(seed), by_seed[seed])
    if points:
        stat_rows("All", points)
    return rows
