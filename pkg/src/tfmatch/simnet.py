"""Similarity-network export for the downstream re-ranking model.

One directory per day: a node table with per-profile temporal features
and three edge files cut from the exact KS scores — positive (KS at or
below rho_p, training positives), negative (KS at or above rho_n), and
the candidate band in between that re-ranking is evaluated on.

Only temporal features are exported here; graph-derived node metrics
are the consumer's business since it rebuilds the graph anyway. The
column semantics travel with the data in feature_manifest.json so the
two packages never share code, only files.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .model import ActivityTimeline, DomainSnapshot
from .serialize import write_json, write_rows_csv
from .similarity import PairScore

NODE_FEATURE_COLUMNS = (
    "event_count",
    "gap_min",
    "gap_q25",
    "gap_median",
    "gap_q75",
    "gap_max",
    "gap_mean",
    "gap_std",
    "active_span",
    "start_offset",
)

_FEATURE_DEFINITIONS = {
    "event_count": "number of events in the day window",
    "gap_min": "smallest inter-event gap, seconds",
    "gap_q25": "25th percentile gap (linear interpolation)",
    "gap_median": "median gap",
    "gap_q75": "75th percentile gap",
    "gap_max": "largest gap",
    "gap_mean": "mean gap",
    "gap_std": "population standard deviation of gaps",
    "active_span": "last event time minus first event time, seconds",
    "start_offset": "first event time minus day start, seconds",
}

DEFAULT_RHO_POSITIVE = 0.001
DEFAULT_RHO_NEGATIVE = 0.98
DEFAULT_CANDIDATE_BAND = (0.001, 0.02616)


@dataclass(frozen=True)
class ExportThresholds:
    rho_positive: float = DEFAULT_RHO_POSITIVE
    rho_negative: float = DEFAULT_RHO_NEGATIVE
    candidate_band: tuple[float, float] = DEFAULT_CANDIDATE_BAND

    def __post_init__(self) -> None:
        if self.rho_positive >= self.rho_negative:
            raise ValueError(
                f"rho_positive {self.rho_positive} must be below rho_negative {self.rho_negative}"
            )
        low, high = self.candidate_band
        if not low < high:
            raise ValueError(f"candidate band must satisfy low < high, got ({low}, {high})")


def node_features(timeline: ActivityTimeline) -> tuple[float, ...]:
    """The exported per-profile temporal feature vector, column order fixed."""
    gaps = np.diff(timeline.times)
    q25, median, q75 = np.quantile(gaps, (0.25, 0.5, 0.75))
    return (
        float(timeline.event_count),
        float(gaps.min()),
        float(q25),
        float(median),
        float(q75),
        float(gaps.max()),
        float(gaps.mean()),
        float(gaps.std()),
        timeline.span,
        float(timeline.times[0] - timeline.day.start),
    )


def export_day(
    outdir: str | Path,
    day_index: int,
    snapshots: Sequence[DomainSnapshot],
    scores: Sequence[PairScore],
    thresholds: ExportThresholds = ExportThresholds(),
) -> Path:
    """Write one day's node and edge files; returns the day directory."""
    day_dir = Path(outdir) / f"day_{day_index:03d}"
    day_dir.mkdir(parents=True, exist_ok=True)

    node_rows = []
    for snapshot in snapshots:
        for local_id in sorted(snapshot.timelines):
            timeline = snapshot.timelines[local_id]
            node_rows.append(
                (str(timeline.profile), snapshot.domain_id, *node_features(timeline))
            )
    node_rows.sort(key=lambda row: row[0])
    write_rows_csv(
        day_dir / "nodes.csv", ("node_id", "domain_id") + NODE_FEATURE_COLUMNS, node_rows
    )

    band_low, band_high = thresholds.candidate_band
    buckets: dict[str, list[tuple[str, str, float]]] = {
        "positive": [],
        "negative": [],
        "candidate": [],
    }
    for score in scores:
        edge = (str(score.left), str(score.right), score.ks)
        if score.ks <= thresholds.rho_positive:
            buckets["positive"].append(edge)
        elif score.ks >= thresholds.rho_negative:
            buckets["negative"].append(edge)
        if band_low < score.ks <= band_high:
            buckets["candidate"].append(edge)
    for name, edges in buckets.items():
        edges.sort(key=lambda e: (e[2], e[0], e[1]))
        write_rows_csv(day_dir / f"edges_{name}.csv", ("source", "target", "ks"), edges)
    return day_dir


def write_feature_manifest(outdir: str | Path, thresholds: ExportThresholds) -> Path:
    path = Path(outdir) / "feature_manifest.json"
    write_json(
        path,
        {
            "node_columns": list(NODE_FEATURE_COLUMNS),
            "definitions": _FEATURE_DEFINITIONS,
            "rho_positive": thresholds.rho_positive,
            "rho_negative": thresholds.rho_negative,
            "candidate_band": list(thresholds.candidate_band),
            "edge_files": ["edges_positive.csv", "edges_negative.csv", "edges_candidate.csv"],
            "node_id": "domain_id/local_id",
        },
    )
    return path
