"""Distance metrics between individuals on their non-sensitive features.

Three base metrics are provided. Bray-Curtis treats every retained feature as
a non-negative number. The two heterogeneous metrics split features by kind:
numeric positions contribute their (scaled) difference, nominal positions
contribute 1 per mismatch. The heterogeneous numeric term is written exactly
as sqrt((a-b)^2) per feature for the Euclidean-overlap variant and |a-b| for
the Manhattan-overlap variant, which makes the two metrics numerically equal;
both are kept as separate entry points because downstream configuration names
them independently.

Heterogeneous distances are turned into similarities in (0, 1] through
``similarity_exp``; Bray-Curtis is already in [0, 1] and is used raw.
"""
from __future__ import annotations

import logging
import math

import numpy as np

from .features import NUMERIC, FeatureSchema, FeatureVector

logger = logging.getLogger(__name__)

BRAYCURTIS = "braycurtis"
HEOM = "HEOM"
HMOM = "HMOM"
DISTANCE_METRICS = (BRAYCURTIS, HEOM, HMOM)

DEFAULT_LAMBDA = 0.1
DEFAULT_K = 5


def prepare(fv: FeatureVector) -> tuple[np.ndarray, np.ndarray]:
    """Split one individual into (scaled numeric, nominal code) arrays.

    Sensitive positions are dropped entirely; numeric values are min-max
    scaled to [0, 1] using the schema bounds so every retained feature has a
    comparable magnitude.
    """
    schema = fv.schema
    numeric = [
        schema.scale_numeric(pos, value)
        for pos, value in zip(schema.numeric_positions, fv.numeric)
        if not schema.sensitive[pos]
    ]
    nominal = [
        float(code)
        for pos, code in zip(schema.nominal_positions, fv.nominal)
        if not schema.sensitive[pos]
    ]
    return np.asarray(numeric, dtype=np.float64), np.asarray(nominal, dtype=np.float64)


def _check_pair(a: FeatureVector, b: FeatureVector) -> None:
    if a.schema is not b.schema and a.schema != b.schema:
        raise ValueError("feature vectors have different schemas")


def braycurtis_arrays(x: np.ndarray, y: np.ndarray) -> float:
    """Sum of |x-y| over sum of |x+y|; in [0, 1] for non-negative inputs."""
    if np.any(x < 0) or np.any(y < 0):
        raise ValueError("braycurtis requires non-negative feature values")
    denom = float(np.abs(x + y).sum())
    if denom == 0.0:
        logger.debug("braycurtis: zero denominator, returning distance 0")
        return 0.0
    return float(np.abs(x - y).sum() / denom)


def heom_arrays(xn, yn, xc, yc) -> float:
    """Euclidean-overlap distance: per-feature sqrt((a-b)^2) plus nominal mismatches.

    The per-feature square root of a square is the absolute difference; it is
    computed as abs directly because squaring first underflows for subnormal
    differences, which would break the exact equality with the Manhattan
    variant that the per-feature form implies.
    """
    xn, yn = np.asarray(xn, dtype=np.float64), np.asarray(yn, dtype=np.float64)
    numeric = float(np.abs(xn - yn).sum())
    return numeric + sum(a != b for a, b in zip(xc, yc))


def hmom_arrays(xn, yn, xc, yc) -> float:
    """Manhattan-overlap distance: per-feature |a-b| plus nominal mismatches."""
    xn, yn = np.asarray(xn, dtype=np.float64), np.asarray(yn, dtype=np.float64)
    return float(np.abs(xn - yn).sum()) + sum(a != b for a, b in zip(xc, yc))


def braycurtis(a: FeatureVector, b: FeatureVector) -> float:
    """Bray-Curtis distance on the prepared (non-sensitive, scaled) features."""
    _check_pair(a, b)
    xn, xc = prepare(a)
    yn, yc = prepare(b)
    return braycurtis_arrays(np.concatenate([xn, xc]), np.concatenate([yn, yc]))


def heom(a: FeatureVector, b: FeatureVector) -> float:
    _check_pair(a, b)
    xn, xc = prepare(a)
    yn, yc = prepare(b)
    return heom_arrays(xn, yn, xc, yc)


def hmom(a: FeatureVector, b: FeatureVector) -> float:
    _check_pair(a, b)
    xn, xc = prepare(a)
    yn, yc = prepare(b)
    return hmom_arrays(xn, yn, xc, yc)


def similarity_exp(raw: float, lam: float = DEFAULT_LAMBDA) -> float:
    """Map a raw distance to a similarity in (0, 1] via exp(-lam * raw)."""
    if lam <= 0:
        raise ValueError("smoothing parameter must be positive")
    return math.exp(-lam * raw)


def metric_fn(name: str):
    try:
        return {BRAYCURTIS: braycurtis, HEOM: heom, HMOM: hmom}[name]
    except KeyError:
        raise ValueError(f"unknown distance metric {name!r}") from None


class PreparedBlock:
    """Column-stacked prepared arrays for a set of individuals.

    Used for vectorised row-against-block distance computation; rows are kept
    in push order so callers can slice suffix windows cheaply.
    """

    def __init__(self, schema: FeatureSchema, capacity: int = 64):
        n_num = sum(
            1 for p in schema.numeric_positions if not schema.sensitive[p]
        )
        n_nom = sum(
            1 for p in schema.nominal_positions if not schema.sensitive[p]
        )
        self.schema = schema
        self._numeric = np.empty((capacity, n_num), dtype=np.float64)
        self._nominal = np.empty((capacity, n_nom), dtype=np.float64)
        self.size = 0

    def _grow(self):
        cap = max(16, 2 * self._numeric.shape[0])
        self._numeric = np.resize(self._numeric, (cap, self._numeric.shape[1]))
        self._nominal = np.resize(self._nominal, (cap, self._nominal.shape[1]))

    def append(self, fv: FeatureVector) -> None:
        if self.size == self._numeric.shape[0]:
            self._grow()
        num, nom = prepare(fv)
        self._numeric[self.size] = num
        self._nominal[self.size] = nom
        self.size += 1

    def drop_oldest(self, count: int) -> None:
        if count <= 0:
            return
        keep = self.size - count
        self._numeric[:keep] = self._numeric[count : self.size].copy()
        self._nominal[:keep] = self._nominal[count : self.size].copy()
        self.size = keep

    def row_distances(self, index: int, metric: str, start: int = 0) -> np.ndarray:
        """Distances from row ``index`` to rows [start, size), itself included."""
        num = self._numeric[start : self.size]
        nom = self._nominal[start : self.size]
        x_num = self._numeric[index]
        x_nom = self._nominal[index]
        if metric == BRAYCURTIS:
            x = np.concatenate([x_num, x_nom])
            block = np.concatenate([num, nom], axis=1)
            denom = np.abs(block + x).sum(axis=1)
            numer = np.abs(block - x).sum(axis=1)
            out = np.zeros(len(block), dtype=np.float64)
            np.divide(numer, denom, out=out, where=denom > 0)
            return out
        if metric == HEOM:
            numeric = np.abs(num - x_num).sum(axis=1)
        elif metric == HMOM:
            numeric = np.abs(num - x_num).sum(axis=1)
        else:
            raise ValueError(f"unknown distance metric {metric!r}")
        return numeric + (nom != x_nom).sum(axis=1)

    def pairwise(self, metric: str, start: int = 0) -> np.ndarray:
        """Full distance matrix over rows [start, size)."""
        n = self.size - start
        out = np.zeros((n, n), dtype=np.float64)
        for i in range(n):
            out[i] = self.row_distances(start + i, metric, start=start)
        return out
