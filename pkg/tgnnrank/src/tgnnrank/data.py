"""Load exported similarity-network snapshots from disk.

The upstream matcher writes one directory per day (day_000, day_001,
...) containing nodes.csv plus three edge files (positive, negative,
candidate), and a top-level feature_manifest.json naming the node
feature columns. This module reads those files and nothing else; the
two packages share file formats, not code.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

_DAY_DIR = re.compile(r"^day_(\d+)$")


@dataclass(frozen=True)
class Edge:
    """One cross-domain edge, endpoints as 'domain/local' node ids."""

    source: str
    target: str
    ks: float


@dataclass(frozen=True)
class GraphDay:
    """One day's snapshot: nodes with raw features and labeled edges."""

    day: int
    node_ids: tuple[str, ...]
    features: np.ndarray  # (nodes, raw feature columns), row i is node_ids[i]
    positive: tuple[Edge, ...]
    negative: tuple[Edge, ...]
    candidate: tuple[Edge, ...]
    index_of: dict[str, int] = field(hash=False, compare=False, default_factory=dict)

    def __post_init__(self) -> None:
        if self.features.shape[0] != len(self.node_ids):
            raise ValueError(
                f"day {self.day}: {self.features.shape[0]} feature rows for "
                f"{len(self.node_ids)} nodes"
            )
        labeled = {(e.source, e.target) for e in self.positive}
        overlap = labeled & {(e.source, e.target) for e in self.negative}
        if overlap:
            raise ValueError(f"day {self.day}: edges labeled both ways: {sorted(overlap)[:3]}")
        self.index_of.update({node: i for i, node in enumerate(self.node_ids)})


@dataclass(frozen=True)
class SnapshotSequence:
    """All exported days in chronological order, plus the feature names."""

    days: tuple[GraphDay, ...]
    feature_columns: tuple[str, ...]
    manifest: dict

    def __len__(self) -> int:
        return len(self.days)

    def all_node_ids(self) -> tuple[str, ...]:
        """Union of node ids across the sequence, sorted for determinism."""
        return tuple(sorted({n for day in self.days for n in day.node_ids}))


def _read_edges(path: Path) -> tuple[Edge, ...]:
    edges = []
    with open(path, newline="") as handle:
        for row in csv.DictReader(handle):
            edges.append(Edge(row["source"], row["target"], float(row["ks"])))
    return tuple(edges)


def _read_nodes(path: Path, columns: tuple[str, ...]) -> tuple[tuple[str, ...], np.ndarray]:
    node_ids: list[str] = []
    rows: list[list[float]] = []
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        missing = set(columns) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing feature columns {sorted(missing)}")
        for row in reader:
            node_ids.append(row["node_id"])
            rows.append([float(row[column]) for column in columns])
    features = np.asarray(rows, dtype=np.float64).reshape(len(node_ids), len(columns))
    return tuple(node_ids), features


def load_snapshots(graphs_dir: str | Path) -> SnapshotSequence:
    """Read every day_NNN directory under graphs_dir, in day order."""
    root = Path(graphs_dir)
    manifest_path = root / "feature_manifest.json"
    if not manifest_path.exists():
        raise ValueError(f"{root} has no feature_manifest.json")
    manifest = json.loads(manifest_path.read_text())
    columns = tuple(manifest["node_columns"])

    days = []
    for entry in sorted(root.iterdir()):
        match = _DAY_DIR.match(entry.name)
        if not match or not entry.is_dir():
            continue
        node_ids, features = _read_nodes(entry / "nodes.csv", columns)
        days.append(
            GraphDay(
                day=int(match.group(1)),
                node_ids=node_ids,
                features=features,
                positive=_read_edges(entry / "edges_positive.csv"),
                negative=_read_edges(entry / "edges_negative.csv"),
                candidate=_read_edges(entry / "edges_candidate.csv"),
            )
        )
    if not days:
        raise ValueError(f"{root} contains no day_NNN directories")
    return SnapshotSequence(days=tuple(days), feature_columns=columns, manifest=manifest)
