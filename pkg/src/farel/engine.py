"""Incremental per-step fairness evaluation.

The engine owns the interaction history and produces the fairness components
of the reward vector after every step. Group notions read the history's
weighted confusion caches in O(1); the individual notions are served by a
pair tracker that keeps full similarity and treatment-distance matrices
aligned with the buffer, so each step costs one new row instead of a full
pairwise recomputation.

For discounted histories the engine also drives the truncation rule: after
every push it measures how much the guiding notion changes when the history
is reduced to its newest ``window`` interactions and feeds that delta to
``FairnessHistory.prune``.
"""
from __future__ import annotations

import numpy as np

from .distances import BRAYCURTIS, HEOM, HMOM
from .features import FeatureSchema
from .history import DISCOUNTED, SLIDING, FairnessHistory, WindowSpec
from .interactions import Interaction
from .notions import (
    GROUP_NOTIONS,
    FairnessValue,
    NotionSpec,
    _GROUP_FNS,
    confusion_from_entries,
)


class PairTracker:
    """Aligned feature rows plus pairwise similarity/treatment matrices.

    Stores, for the live history window, the matrix of pair values ``d``
    (exponential similarity for the heterogeneous metrics, raw distance for
    Bray-Curtis) and the matrix of total variation distances between action
    distributions. Rows are appended on push and the window start advances on
    eviction; storage is compacted lazily.
    """

    _COMPACT_SLACK = 256

    def __init__(self, schema: FeatureSchema, spec: NotionSpec, n_actions: int, capacity: int = 64):
        self.spec = spec
        num_positions = [p for p in schema.numeric_positions if not schema.sensitive[p]]
        nom_positions = [p for p in schema.nominal_positions if not schema.sensitive[p]]
        self._schema = schema
        self._num_idx = [schema.numeric_positions.index(p) for p in num_positions]
        self._num_pos = num_positions
        self._nom_idx = [schema.nominal_positions.index(p) for p in nom_positions]
        cap = capacity + self._COMPACT_SLACK
        self._numeric = np.zeros((cap, len(num_positions)), dtype=np.float64)
        self._nominal = np.zeros((cap, len(nom_positions)), dtype=np.float64)
        self._actions = np.zeros(cap, dtype=np.float64)
        self._action_dists = np.zeros((cap, n_actions), dtype=np.float64)
        self._d = np.zeros((cap, cap), dtype=np.float64)
        self._tv = np.zeros((cap, cap), dtype=np.float64)
        self.start = 0
        self.size = 0

    # -- storage -----------------------------------------------------------

    def _ensure_room(self) -> None:
        cap = self._d.shape[0]
        if self.start + self.size < cap:
            return
        if self.start > 0:
            self._compact()
            return
        new_cap = 2 * cap
        for name in ("_numeric", "_nominal", "_action_dists"):
            old = getattr(self, name)
            grown = np.zeros((new_cap, old.shape[1]), dtype=np.float64)
            grown[: self.start + self.size] = old[: self.start + self.size]
            setattr(self, name, grown)
        actions = np.zeros(new_cap, dtype=np.float64)
        actions[: self.start + self.size] = self._actions[: self.start + self.size]
        self._actions = actions
        for name in ("_d", "_tv"):
            old = getattr(self, name)
            grown = np.zeros((new_cap, new_cap), dtype=np.float64)
            grown[: self.start + self.size, : self.start + self.size] = old[
                : self.start + self.size, : self.start + self.size
            ]
            setattr(self, name, grown)

    def _compact(self) -> None:
        s, m = self.start, self.size
        if s == 0:
            return
        self._numeric[:m] = self._numeric[s : s + m].copy()
        self._nominal[:m] = self._nominal[s : s + m].copy()
        self._actions[:m] = self._actions[s : s + m].copy()
        self._action_dists[:m] = self._action_dists[s : s + m].copy()
        self._d[:m, :m] = self._d[s : s + m, s : s + m].copy()
        self._tv[:m, :m] = self._tv[s : s + m, s : s + m].copy()
        self.start = 0

    # -- updates -----------------------------------------------------------

    def push(self, x: Interaction) -> None:
        self._ensure_room()
        pos = self.start + self.size
        fv = x.individual
        self._numeric[pos] = [
            self._schema.scale_numeric(p, fv.numeric[i]) for p, i in zip(self._num_pos, self._num_idx)
        ]
        self._nominal[pos] = [float(fv.nominal[i]) for i in self._nom_idx]
        self._actions[pos] = float(x.action)
        self._action_dists[pos] = x.action_dist

        lo, hi = self.start, pos + 1
        num = self._numeric[lo:hi]
        nom = self._nominal[lo:hi]
        if self.spec.distance == BRAYCURTIS:
            x_all = np.concatenate([self._numeric[pos], self._nominal[pos]])
            block = np.concatenate([num, nom], axis=1)
            denom = np.abs(block + x_all).sum(axis=1)
            numer = np.abs(block - x_all).sum(axis=1)
            row = np.zeros(hi - lo, dtype=np.float64)
            np.divide(numer, denom, out=row, where=denom > 0)
        else:
            if self.spec.distance == HEOM:
                numeric = np.abs(num - self._numeric[pos]).sum(axis=1)
            else:
                numeric = np.abs(num - self._numeric[pos]).sum(axis=1)
            raw = numeric + (nom != self._nominal[pos]).sum(axis=1)
            row = np.exp(-self.spec.lam * raw)
        row[-1] = 0.0
        self._d[pos, lo:hi] = row
        self._d[lo:hi, pos] = row

        tv_row = 0.5 * np.abs(self._action_dists[lo:hi] - self._action_dists[pos]).sum(axis=1)
        tv_row[-1] = 0.0
        self._tv[pos, lo:hi] = tv_row
        self._tv[lo:hi, pos] = tv_row
        self.size += 1

    def evict_oldest(self, count: int = 1) -> None:
        self.start += count
        self.size -= count

    def truncate_to_suffix(self, keep: int) -> None:
        if keep < self.size:
            self.evict_oldest(self.size - keep)

    # -- notion values -------------------------------------------------------

    def _live(self, matrix: np.ndarray, suffix: int | None = None) -> np.ndarray:
        m = self.size if suffix is None else min(suffix, self.size)
        hi = self.start + self.size
        return matrix[hi - m : hi, hi - m : hi]

    def individual_fairness(self, suffix: int | None = None) -> FairnessValue:
        m = self.size if suffix is None else min(suffix, self.size)
        if m < 2:
            return FairnessValue(0.0, defined=False)
        total = float(self._live(self._d, suffix).sum()) - float(self._live(self._tv, suffix).sum())
        n = m * (m - 1)
        return FairnessValue(min(0.0, max(-1.0, -1.0 + total / n)))

    def consistency_score_complement(self, k: int) -> FairnessValue:
        m = self.size
        if m < k + 1:
            return FairnessValue(0.0, defined=False)
        # nearest = smallest raw distance = largest similarity; equal keys are
        # taken in push order, i.e. earlier timestep first
        if self.spec.distance == BRAYCURTIS:
            key = self._live(self._d).copy()
        else:
            key = -self._live(self._d)
        np.fill_diagonal(key, np.inf)
        kth = np.partition(key, k - 1, axis=1)[:, k - 1]
        less = key < kth[:, None]
        eq = key == kth[:, None]
        need = k - less.sum(axis=1)
        sel_eq = eq & (np.cumsum(eq, axis=1) <= need[:, None])
        neighbours = less | sel_eq
        hi = self.start + self.size
        actions = self._actions[self.start : hi]
        neighbour_sums = neighbours @ actions
        terms = np.abs(actions - neighbour_sums) / k
        return FairnessValue(-float(terms.mean()))


class FairnessEngine:
    """Evaluates the configured notions after each interaction.

    ``notions`` are the specs to evaluate per step (reward objectives or a
    post-hoc measurement set). ``guiding`` picks the notion whose stability
    drives discounted-history truncation; it defaults to individual fairness
    with the first configured distance metric.
    """

    def __init__(
        self,
        notions: list[NotionSpec],
        window: WindowSpec,
        schema: FeatureSchema,
        n_actions: int = 2,
        guiding: NotionSpec | None = None,
    ):
        self.notions = list(notions)
        self.window = window
        self.history = FairnessHistory(window)
        self.step_history = FairnessHistory(WindowSpec(SLIDING, 1))
        if guiding is None:
            distance = next((s.distance for s in self.notions if s.kind in ("IF", "CSC")), HEOM)
            guiding = NotionSpec("IF", distance=distance)
        self.guiding = guiding
        needs_pairs = {s.distance for s in self.notions if s.kind in ("IF", "CSC")}
        if window.kind == DISCOUNTED and self.guiding.kind in ("IF", "CSC"):
            needs_pairs.add(self.guiding.distance)
        self._trackers = {
            metric: PairTracker(
                schema,
                NotionSpec("IF", distance=metric, lam=self.guiding.lam),
                n_actions,
                capacity=window.window,
            )
            for metric in sorted(needs_pairs)
        }
        #: per-step history length, appended on every observe
        self.window_sizes: list[int] = []

    def observe(self, x: Interaction) -> dict[str, FairnessValue]:
        """Push one interaction, evaluate notions, apply the pruning rule."""
        before = len(self.history)
        self.history.push(x)
        self.step_history.push(x)
        evicted = self.window.kind == SLIDING and before == self.window.window
        for tracker in self._trackers.values():
            tracker.push(x)
            if evicted:
                tracker.evict_oldest()

        values = self.values()

        if self.window.kind == DISCOUNTED:
            delta = self._guiding_delta()
            if self.history.prune(delta):
                for tracker in self._trackers.values():
                    tracker.truncate_to_suffix(len(self.history))
        self.window_sizes.append(len(self.history))
        return values

    def values(self) -> dict[str, FairnessValue]:
        """Current value of every configured notion."""
        out: dict[str, FairnessValue] = {}
        for spec in self.notions:
            out[spec.kind] = self._evaluate(spec)
        return out

    def _evaluate(self, spec: NotionSpec, suffix: int | None = None) -> FairnessValue:
        if spec.kind in GROUP_NOTIONS:
            g, g2 = spec.groups
            if suffix is None:
                return _GROUP_FNS[spec.kind](self.history.confusion(g), self.history.confusion(g2))
            entries = self.history.newest(suffix)
            now = self.history.now
            return _GROUP_FNS[spec.kind](
                confusion_from_entries(entries, g, now, self.window),
                confusion_from_entries(entries, g2, now, self.window),
            )
        tracker = self._trackers[spec.distance]
        if spec.kind == "IF":
            return tracker.individual_fairness(suffix)
        if suffix is not None:
            raise ValueError("CSC suffix evaluation is not supported")
        return tracker.consistency_score_complement(spec.k)

    def _guiding_delta(self) -> float:
        if len(self.history) <= self.window.window:
            return 0.0
        full = self._evaluate(self.guiding)
        suffix = self._evaluate_suffix(self.guiding, self.window.window)
        if not (full.defined and suffix.defined):
            return 0.0
        return full.value - suffix.value

    def _evaluate_suffix(self, spec: NotionSpec, keep: int) -> FairnessValue:
        if spec.kind == "CSC":
            from .notions import consistency_score_complement_of

            return consistency_score_complement_of(self.history.newest(keep), spec)
        return self._evaluate(spec, suffix=keep)
