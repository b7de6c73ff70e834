"""Mixed numeric/nominal feature vectors with per-position metadata.

A schema tags every position as numeric or nominal, marks the positions that
must be excluded from distance computation (the sensitive ones), and carries
min/max bounds so numeric values can be scaled to [0, 1] consistently across
the whole run.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

NUMERIC = "numeric"
NOMINAL = "nominal"


@dataclass(frozen=True)
class FeatureSchema:
    names: tuple[str, ...]
    kinds: tuple[str, ...]
    sensitive: tuple[bool, ...]
    #: (lo, hi) scaling bounds per position; ignored for nominal positions.
    bounds: tuple[tuple[float, float] | None, ...]
    #: number of categories per nominal position (used for observation scaling).
    levels: tuple[int | None, ...] = field(default=())

    def __post_init__(self):
        n = len(self.names)
        if not (len(self.kinds) == len(self.sensitive) == len(self.bounds) == n):
            raise ValueError("schema field lengths disagree")
        for kind in self.kinds:
            if kind not in (NUMERIC, NOMINAL):
                raise ValueError(f"unknown feature kind {kind!r}")
        if not self.levels:
            object.__setattr__(self, "levels", tuple(None for _ in self.names))
        elif len(self.levels) != n:
            raise ValueError("schema field lengths disagree")
        for kind, bound in zip(self.kinds, self.bounds):
            if kind == NUMERIC:
                if bound is None:
                    raise ValueError("numeric positions need (lo, hi) bounds")
                lo, hi = bound
                if not hi > lo:
                    raise ValueError(f"invalid bounds ({lo}, {hi})")

    @property
    def numeric_positions(self) -> tuple[int, ...]:
        return tuple(i for i, k in enumerate(self.kinds) if k == NUMERIC)

    @property
    def nominal_positions(self) -> tuple[int, ...]:
        return tuple(i for i, k in enumerate(self.kinds) if k == NOMINAL)

    def scale_numeric(self, position: int, value: float) -> float:
        """Min-max scale one numeric value to [0, 1], clipping out-of-range."""
        lo, hi = self.bounds[position]
        return min(1.0, max(0.0, (float(value) - lo) / (hi - lo)))

    def to_json(self) -> dict:
        return {
            "names": list(self.names),
            "kinds": list(self.kinds),
            "sensitive": list(self.sensitive),
            "bounds": [list(b) if b is not None else None for b in self.bounds],
            "levels": list(self.levels),
        }

    @classmethod
    def from_json(cls, data: dict) -> "FeatureSchema":
        return cls(
            names=tuple(data["names"]),
            kinds=tuple(data["kinds"]),
            sensitive=tuple(bool(s) for s in data["sensitive"]),
            bounds=tuple(tuple(b) if b is not None else None for b in data["bounds"]),
            levels=tuple(data.get("levels") or (None,) * len(data["names"])),
        )


@dataclass(frozen=True)
class FeatureVector:
    """Values for one schema: numeric reals and nominal category codes.

    ``numeric`` holds the values of the schema's numeric positions in order;
    ``nominal`` the integer codes of its nominal positions in order.
    """

    schema: FeatureSchema
    numeric: tuple[float, ...]
    nominal: tuple[int, ...]

    def __post_init__(self):
        if len(self.numeric) != len(self.schema.numeric_positions):
            raise ValueError("numeric length does not match schema")
        if len(self.nominal) != len(self.schema.nominal_positions):
            raise ValueError("nominal length does not match schema")

    def value_at(self, position: int):
        kind = self.schema.kinds[position]
        if kind == NUMERIC:
            return self.numeric[self.schema.numeric_positions.index(position)]
        return self.nominal[self.schema.nominal_positions.index(position)]

    def encode(self) -> np.ndarray:
        """Flat float64 observation: scaled numerics, nominal codes in [0, 1]."""
        out = np.empty(len(self.schema.names), dtype=np.float64)
        num_it = iter(self.numeric)
        nom_it = iter(self.nominal)
        for i, kind in enumerate(self.schema.kinds):
            if kind == NUMERIC:
                out[i] = self.schema.scale_numeric(i, next(num_it))
            else:
                code = next(nom_it)
                levels = self.schema.levels[i]
                out[i] = code / (levels - 1) if levels and levels > 1 else float(code)
        return out

    def to_json(self) -> dict:
        return {"numeric": list(self.numeric), "nominal": list(self.nominal)}

    @classmethod
    def from_json(cls, schema: FeatureSchema, data: dict) -> "FeatureVector":
        return cls(schema, tuple(float(v) for v in data["numeric"]), tuple(int(v) for v in data["nominal"]))
