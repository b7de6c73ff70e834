"""Result-file emission: CSV tables, window-size traces and radar SVGs.

All files are UTF-8 with LF line endings and '.' decimal separators; numbers
are rounded to 5 decimals with trailing zeros stripped. Output is fully
deterministic (no timestamps), so repeated runs of the same config produce
byte-identical files.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from ..objectives import CANONICAL_OBJECTIVES
from ..pareto import PolicyPoint, summarize

_POLICY_HEADER = "objectives,seed," + ",".join(CANONICAL_OBJECTIVES)
_SUMMARY_HEADER = "objectives,seed,statistic," + ",".join(CANONICAL_OBJECTIVES)
_TRACE_HEADER = "step,mean_window,std_window"

_PALETTE = (
    "#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3",
    "#937860", "#da8bc3", "#8c8c8c", "#ccb974", "#64b5cd",
)


def fmt(value: float) -> str:
    """Round to 5 decimals; shortest decimal representation."""
    return repr(round(float(value), 5))


def _write_lines(path, lines) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")


def write_policy_table(path, objectives_label: str, points: list[PolicyPoint]) -> None:
    lines = [_POLICY_HEADER]
    for p in points:
        lines.append(f"{objectives_label},{p.seed}," + ",".join(fmt(v) for v in p.returns))
    _write_lines(path, lines)


def write_summary_table(path, objectives_label: str, points: list[PolicyPoint]) -> None:
    lines = [_SUMMARY_HEADER]
    for row in summarize(points):
        lines.append(
            f"{objectives_label},{row.seed},{row.statistic}," + ",".join(fmt(v) for v in row.values)
        )
    _write_lines(path, lines)


def write_window_trace(path, window_sizes: list[int], sample_every: int) -> None:
    """Mean/std of the history size over consecutive sampling intervals."""
    lines = [_TRACE_HEADER]
    sizes = np.asarray(window_sizes, dtype=np.float64)
    for end in range(sample_every, len(sizes) + 1, sample_every):
        chunk = sizes[end - sample_every : end]
        lines.append(f"{end},{fmt(chunk.mean())},{fmt(chunk.std())}")
    _write_lines(path, lines)


def write_manifest(path, manifest: dict) -> None:
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _polygon_points(values, center: float, radius: float) -> str:
    coords = []
    for i, value in enumerate(values):
        fraction = min(1.0, max(0.0, 1.0 + value))
        angle = math.radians(-90.0 + i * 360.0 / len(values))
        x = center + radius * fraction * math.cos(angle)
        y = center + radius * fraction * math.sin(angle)
        coords.append(f"{x:.2f},{y:.2f}")
    return " ".join(coords)


def write_radar(path, normalized_points: list[PolicyPoint], labels=CANONICAL_OBJECTIVES) -> None:
    """Static radar chart: one polygon per policy, axis maximum 0 at the rim."""
    size, radius = 440.0, 160.0
    center = size / 2
    n = len(labels)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {size:g} {size:g}">',
        f'<rect width="{size:g}" height="{size:g}" fill="white"/>',
    ]
    for level in (0.25, 0.5, 0.75, 1.0):
        ring = _polygon_points([-1.0 + level] * n, center, radius)
        parts.append(f'<polygon points="{ring}" fill="none" stroke="#dddddd" stroke-width="1"/>')
    for i, label in enumerate(labels):
        angle = math.radians(-90.0 + i * 360.0 / n)
        x = center + radius * math.cos(angle)
        y = center + radius * math.sin(angle)
        parts.append(
            f'<line x1="{center:g}" y1="{center:g}" x2="{x:.2f}" y2="{y:.2f}" '
            'stroke="#bbbbbb" stroke-width="1"/>'
        )
        lx = center + (radius + 18) * math.cos(angle)
        ly = center + (radius + 18) * math.sin(angle)
        parts.append(
            f'<text x="{lx:.2f}" y="{ly:.2f}" font-family="sans-serif" font-size="13" '
            'text-anchor="middle" dominant-baseline="middle">' + label + "</text>"
        )
    for i, point in enumerate(normalized_points):
        colour = _PALETTE[i % len(_PALETTE)]
        polygon = _polygon_points(point.returns, center, radius)
        parts.append(
            f'<polygon points="{polygon}" fill="{colour}" fill-opacity="0.12" '
            f'stroke="{colour}" stroke-width="1.5"/>'
        )
    parts.append("</svg>")
    _write_lines(path, parts)
