"""Comparisons of heuristic frontiers against the exact standard frontier.

Distances are oriented so that points inside the standard frontier give
nonnegative values: ``phi = v - v_hat(r)`` is the excess variance paid for
return ``r`` and ``psi = r_hat(v) - r`` the return given up at variance
``v``. Interpolation clamps to the frontier's endpoints.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from typing import Mapping, Optional, Sequence

import numpy as np

from .data_io import FrontierRecord
from .errors import DomainError
from .exact_frontier import StandardFrontier
from .heuristic import ParetoArchive
from .model import pareto_filter

BINS = 100


@dataclass(frozen=True)
class DistanceReport:
    mean_return_distance: float
    variance_distance: float
    point_count: int


@dataclass(frozen=True)
class SourceSummary:
    initial: int
    surviving: int
    survival_pct: float
    contribution_pct: float


@dataclass(frozen=True)
class MergedFrontier:
    points: tuple[FrontierRecord, ...]
    per_source: dict[str, SourceSummary]

    def by_source(self, tag: str) -> list[FrontierRecord]:
        return [p for p in self.points if p.source == tag]


@dataclass(frozen=True)
class SourceStats:
    distances: Optional[DistanceReport]
    occupancy: tuple[float, float]  # (return %, variance %)


def _curve(frontier: StandardFrontier):
    if len(frontier.points) < 2:
        raise DomainError("the standard frontier needs at least 2 points")
    return frontier.variances, frontier.returns


def interpolate(frontier: StandardFrontier, axis: str, query):
    """Piecewise-linear frontier lookup.

    ``axis="return"`` maps a return to the frontier variance at that return;
    ``axis="variance"`` maps a variance to the frontier return. Queries
    outside the frontier clamp to the nearest endpoint.
    """
    v, r = _curve(frontier)
    if axis == "return":
        out = np.interp(query, r, v)
    elif axis == "variance":
        out = np.interp(query, v, r)
    else:
        raise ValueError(f"axis must be 'return' or 'variance', got {axis!r}")
    return float(out) if np.ndim(out) == 0 else out


def signed_distances(standard: StandardFrontier, heuristic: Sequence[FrontierRecord]):
    """Unclamped per-point ``(phi, psi)`` arrays."""
    v = np.array([p.variance for p in heuristic])
    r = np.array([p.mean_return for p in heuristic])
    phi = v - interpolate(standard, "return", r)
    psi = interpolate(standard, "variance", v) - r
    return np.atleast_1d(phi), np.atleast_1d(psi)


def average_distances(standard: StandardFrontier, heuristic: Sequence[FrontierRecord]) -> DistanceReport:
    if len(heuristic) == 0:
        raise DomainError("cannot measure distances of an empty frontier")
    phi, psi = signed_distances(standard, heuristic)
    # negatives only come from chord error on the convex frontier
    phi = np.maximum(phi, 0.0)
    psi = np.maximum(psi, 0.0)
    return DistanceReport(float(psi.mean()), float(phi.mean()), len(heuristic))


def _bin_occupancy(values: np.ndarray, lo: float, hi: float) -> float:
    if not hi > lo:
        raise DomainError(f"degenerate frontier range [{lo}, {hi}]")
    inside = values[(values >= lo) & (values <= hi)]
    idx = np.floor((inside - lo) / (hi - lo) * BINS).astype(int)
    idx = np.minimum(idx, BINS - 1)
    return 100.0 * np.unique(idx).size / BINS


def occupancy(standard: StandardFrontier, heuristic: Sequence[FrontierRecord]) -> tuple[float, float]:
    """Percent of the 100 equal return and variance bins of the standard range that are hit."""
    v, r = _curve(standard)
    hv = np.array([p.variance for p in heuristic], dtype=float)
    hr = np.array([p.mean_return for p in heuristic], dtype=float)
    return _bin_occupancy(hr, r.min(), r.max()), _bin_occupancy(hv, v.min(), v.max())


def persistence(archive) -> tuple[int, float]:
    """Archive size and its share of all evaluated portfolios, in percent."""
    if archive.evaluations <= 0:
        raise DomainError("persistence needs a positive evaluation count")
    count = len(archive.points)
    return count, 100.0 * count / archive.evaluations


def merge_frontiers(named: Mapping[str, Sequence[FrontierRecord]]) -> MergedFrontier:
    """Non-dominated union of tagged frontiers.

    A point present in several inputs is credited to the lexicographically
    smallest tag.
    """
    if not any(len(pts) for pts in named.values()):
        raise DomainError("all input frontiers are empty")
    union = [replace(p, source=tag) for tag in sorted(named) for p in named[tag]]
    merged = tuple(pareto_filter(union))
    total = len(merged)
    per_source = {}
    for tag in sorted(named):
        initial = len(named[tag])
        surviving = sum(1 for p in merged if p.source == tag)
        per_source[tag] = SourceSummary(
            initial,
            surviving,
            100.0 * surviving / initial if initial else 0.0,
            100.0 * surviving / total,
        )
    return MergedFrontier(merged, per_source)


def per_source_stats(merged: MergedFrontier, standard: StandardFrontier) -> dict[str, SourceStats]:
    """Distances and occupancy for the whole merged set ("All") and each source part."""
    if not merged.points:
        raise DomainError("merged frontier is empty")
    parts = {"All": list(merged.points)}
    for tag in merged.per_source:
        parts[tag] = merged.by_source(tag)
    out = {}
    for tag, pts in parts.items():
        dist = average_distances(standard, pts) if pts else None
        out[tag] = SourceStats(dist, occupancy(standard, pts))
    return out


# -- reports ---------------------------------------------------------------

Cell = tuple[str, str, str, float]


def single_frontier_cells(standard: StandardFrontier, heuristic: Sequence[FrontierRecord],
                          source: str, evaluations: Optional[int] = None) -> list[Cell]:
    cells: list[Cell] = []
    if evaluations:
        count, pct = persistence(ParetoArchive(list(heuristic), evaluations))
        cells += [("1 Persistence", source, "cardinal", count), ("1 Persistence", source, "percentage", pct)]
    d = average_distances(standard, heuristic)
    occ_r, occ_v = occupancy(standard, heuristic)
    cells += [
        ("2 Average distance", source, "mean_return", d.mean_return_distance),
        ("2 Average distance", source, "variance", d.variance_distance),
        ("3 Occupancy", source, "mean_return", occ_r),
        ("3 Occupancy", source, "variance", occ_v),
    ]
    return cells


def merge_cells(merged: MergedFrontier, standard: StandardFrontier) -> list[Cell]:
    cells: list[Cell] = []
    for tag, s in merged.per_source.items():
        cells += [
            ("4 Surviving the merge", tag, "initial_cardinal", s.initial),
            ("4 Surviving the merge", tag, "final_cardinal", s.surviving),
            ("4 Surviving the merge", tag, "percentage", s.survival_pct),
        ]
    for tag, s in merged.per_source.items():
        cells += [
            ("5 Contribution to the merge", tag, "cardinal", s.surviving),
            ("5 Contribution to the merge", tag, "percentage", s.contribution_pct),
        ]
    stats = per_source_stats(merged, standard)
    for tag, st in stats.items():
        d = st.distances
        cells += [
            ("6 Average distance after merge", tag, "mean_return", math.nan if d is None else d.mean_return_distance),
            ("6 Average distance after merge", tag, "variance", math.nan if d is None else d.variance_distance),
        ]
    for tag, st in stats.items():
        cells += [
            ("7 Occupancy after merge", tag, "mean_return", st.occupancy[0]),
            ("7 Occupancy after merge", tag, "variance", st.occupancy[1]),
        ]
    return cells


def cells_to_csv(cells: Sequence[Cell]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["table", "source", "metric", "value"])
    for table, source, metric, value in cells:
        w.writerow([table, source, metric, repr(float(value))])
    return buf.getvalue()


def _render_value(table: str, metric: str, value: float) -> str:
    if math.isnan(value):
        return "-"
    if "cardinal" in metric:
        return str(int(value))
    if metric == "percentage" or table.startswith(("3", "7")):
        return f"{value:.2f}%"
    return f"{value:.6f}"


def render_report(cells: Sequence[Cell]) -> str:
    """Plain-text tables, one block per table, one row per source."""
    tables: dict[str, dict[str, dict[str, float]]] = {}
    for table, source, metric, value in cells:
        tables.setdefault(table, {}).setdefault(source, {})[metric] = value
    lines = []
    for table, rows in tables.items():
        metrics = list(next(iter(rows.values())))
        lines.append(f"Table {table}")
        lines.append("\t".join(["Heuristic", *metrics]))
        for source, vals in rows.items():
            lines.append("\t".join([source, *(_render_value(table, m, vals[m]) for m in metrics)]))
        lines.append("")
    return "\n".join(lines)
