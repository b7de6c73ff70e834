"""Shared fixtures: schema builders, interaction factories and brute-force oracles.

The oracles deliberately avoid the library's vectorised code paths: they are
plain-Python reimplementations straight from the definitions, used to check
the incremental/vectorised implementations against an independent route.
"""
from __future__ import annotations

import math

import numpy as np
import pytest

from farel.features import NOMINAL, NUMERIC, FeatureSchema, FeatureVector
from farel.interactions import Interaction


def mixed_schema(sensitive=(False, False, False, False)) -> FeatureSchema:
    """Two numeric and two nominal positions: (num0, nom0, num1, nom1)."""
    return FeatureSchema(
        names=("num0", "nom0", "num1", "nom1"),
        kinds=(NUMERIC, NOMINAL, NUMERIC, NOMINAL),
        sensitive=tuple(sensitive),
        bounds=((0.0, 10.0), None, (0.0, 10.0), None),
        levels=(None, 4, None, 4),
    )


def make_individual(schema, numeric=(0.0, 0.0), nominal=(0, 0)) -> FeatureVector:
    return FeatureVector(schema, tuple(float(v) for v in numeric), tuple(int(v) for v in nominal))


def make_interaction(
    t,
    *,
    schema=None,
    numeric=(0.0, 0.0),
    nominal=(0, 0),
    groups=("g",),
    action=0,
    action_dist=None,
    feedback=None,
) -> Interaction:
    schema = schema or mixed_schema()
    fv = make_individual(schema, numeric, nominal)
    if action_dist is None:
        action_dist = (1.0, 0.0) if action == 0 else (0.0, 1.0)
    return Interaction(
        t=t,
        state=fv,
        individual=fv,
        groups=frozenset(groups),
        action=action,
        action_dist=tuple(action_dist),
        reward=None,
        feedback=feedback,
    )


def random_interaction(rng, t, schema, n_groups=2) -> Interaction:
    groups = [f"g{i}" for i in range(n_groups) if rng.random() < 0.6]
    if not groups:
        groups = [f"g{int(rng.integers(n_groups))}"]
    p = rng.random()
    action = int(rng.random() < p)
    feedback = int(rng.integers(2)) if rng.random() < 0.7 else None
    return make_interaction(
        t,
        schema=schema,
        numeric=tuple(rng.uniform(0, 10, size=2)),
        nominal=tuple(int(v) for v in rng.integers(0, 4, size=2)),
        groups=groups,
        action=action,
        action_dist=(1 - p, p),
        feedback=feedback,
    )


# -- independent oracles ------------------------------------------------------


def oracle_prepare(fv: FeatureVector):
    """Plain-python version of sensitive-dropping plus min-max scaling."""
    schema = fv.schema
    numeric, nominal = [], []
    num_iter = iter(fv.numeric)
    nom_iter = iter(fv.nominal)
    for pos, kind in enumerate(schema.kinds):
        if kind == NUMERIC:
            v = next(num_iter)
            if not schema.sensitive[pos]:
                lo, hi = schema.bounds[pos]
                numeric.append(min(1.0, max(0.0, (v - lo) / (hi - lo))))
        else:
            c = next(nom_iter)
            if not schema.sensitive[pos]:
                nominal.append(c)
    return numeric, nominal


def oracle_distance(a: FeatureVector, b: FeatureVector, metric: str) -> float:
    an, ac = oracle_prepare(a)
    bn, bc = oracle_prepare(b)
    if metric == "braycurtis":
        x = an + [float(c) for c in ac]
        y = bn + [float(c) for c in bc]
        denom = sum(abs(p + q) for p, q in zip(x, y))
        if denom == 0:
            return 0.0
        return sum(abs(p - q) for p, q in zip(x, y)) / denom
    num = sum(math.sqrt((p - q) ** 2) if metric == "HEOM" else abs(p - q) for p, q in zip(an, bn))
    return num + sum(p != q for p, q in zip(ac, bc))


def oracle_tv(p, q) -> float:
    return 0.5 * sum(abs(a - b) for a, b in zip(p, q))


def oracle_individual_fairness(entries, metric: str, lam: float = 0.1) -> float | None:
    """Ordered-pair double sum, straight from the definition."""
    m = len(entries)
    if m < 2:
        return None
    total = 0.0
    for i in range(m):
        for j in range(m):
            if i == j:
                continue
            raw = oracle_distance(entries[i].individual, entries[j].individual, metric)
            d = raw if metric == "braycurtis" else math.exp(-lam * raw)
            total += d - oracle_tv(entries[i].action_dist, entries[j].action_dist)
    value = -1.0 + total / (m * (m - 1))
    return min(0.0, max(-1.0, value))


def oracle_csc(entries, metric: str, k: int = 5) -> float | None:
    """All-pairs kNN with (distance, earlier-timestep) tie-breaking."""
    m = len(entries)
    if m < k + 1:
        return None
    total = 0.0
    for i in range(m):
        dists = sorted(
            (oracle_distance(entries[i].individual, entries[j].individual, metric), j)
            for j in range(m)
            if j != i
        )
        neighbour_sum = sum(entries[j].action for _, j in dists[:k])
        total += abs(entries[i].action - neighbour_sum) / k
    return -total / m


def oracle_group_counts(entries, group: str, now: int, kind: str, gamma: float = 1.0):
    """Weighted tallies via direct power evaluation per interaction."""
    tp = fp = fn = tn = pos = total = 0.0
    for x in entries:
        if group not in x.groups:
            continue
        w = 1.0 if kind == "sliding" else gamma ** (now - x.t)
        total += w
        if x.action == 1:
            pos += w
        if x.feedback is None:
            continue
        if x.action == 1 and x.feedback == 1:
            tp += w
        elif x.action == 1 and x.feedback == 0:
            fp += w
        elif x.action == 0 and x.feedback == 1:
            fn += w
        else:
            tn += w
    return {"tp": tp, "fp": fp, "fn": fn, "tn": tn, "pos": pos, "total": total}


def oracle_group_notion(kind: str, a: dict, b: dict) -> float | None:
    def rate(c, num_keys, den_keys):
        num = sum(c[k] for k in num_keys)
        den = sum(c[k] for k in den_keys)
        return num / den if den > 0 else None

    selectors = {
        "SP": (("pos",), ("total",)),
        "EO": (("tp",), ("tp", "fn")),
        "OAE": (("tp", "tn"), ("tp", "fp", "fn", "tn")),
        "PP": (("tp",), ("tp", "fp")),
        "PE": (("fp",), ("fp", "tn")),
    }
    num_keys, den_keys = selectors[kind]
    ra, rb = rate(a, num_keys, den_keys), rate(b, num_keys, den_keys)
    if ra is None or rb is None:
        return None
    return -abs(ra - rb)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
