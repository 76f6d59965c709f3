"""Baseline identity functions the temporal method is compared against.

Two baselines: activity overlap (do the two profiles act at the same
times?) and an adapter over externally computed structural node
embeddings, ranked by inverse Euclidean distance. The embedding method
itself is out of scope; any table with one fixed-dimension vector per
profile can be plugged in.

Baseline rankings reuse the PairScore record so one ranked-file contract
serves every method: the composite column holds the method's own
distance (1 - overlap, or Euclidean distance), ascending means better,
and the significance fields are inert (gof false, p_value NaN).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import IO, Mapping, Sequence

import numpy as np

from .ingest import _text_stream
from .model import ActivityTimeline, DomainSnapshot, ProfileId
from .similarity import PairScore, _pair_sort_key

DEFAULT_OVERLAP_RESOLUTION_SECONDS = 60.0


def activity_overlap(
    a: ActivityTimeline,
    b: ActivityTimeline,
    resolution: float = DEFAULT_OVERLAP_RESOLUTION_SECONDS,
) -> float:
    """min(|A∩B|/|A|, |A∩B|/|B|) over time-bucketed activity sets.

    Raw real-valued timestamps almost never collide, so timestamps are
    bucketed to floor(t/resolution) first. The bucket width is a real
    modelling choice (60 s by default) and is surfaced in reports.
    """
    if resolution <= 0:
        raise ValueError(f"resolution must be > 0, got {resolution}")
    buckets_a = set(np.floor_divide(a.times, resolution).astype(np.int64).tolist())
    buckets_b = set(np.floor_divide(b.times, resolution).astype(np.int64).tolist())
    if not buckets_a or not buckets_b:
        raise ValueError("cannot compute overlap of an empty timeline")
    common = len(buckets_a & buckets_b)
    return min(common / len(buckets_a), common / len(buckets_b))


def embedding_distance_score(e1: np.ndarray, e2: np.ndarray) -> float:
    """Inverse Euclidean distance; larger means more likely the same entity.

    Identical vectors have distance zero; the score is +inf so the pair
    sorts ahead of everything. Callers should surface the sentinel
    rather than fold it into averages.
    """
    e1 = np.asarray(e1, dtype=np.float64)
    e2 = np.asarray(e2, dtype=np.float64)
    if e1.shape != e2.shape:
        raise ValueError(f"dimension mismatch: {e1.shape} vs {e2.shape}")
    distance = float(np.linalg.norm(e1 - e2))
    if distance == 0.0:
        return math.inf
    return 1.0 / distance


@dataclass(frozen=True)
class EmbeddingTable:
    """ProfileId -> embedding vector, one fixed dimension per table."""

    vectors: Mapping[ProfileId, np.ndarray]
    dimension: int

    def __len__(self) -> int:
        return len(self.vectors)


def _parse_profile_ref(raw: str, line_num: int) -> ProfileId:
    # Rows carry the qualified "domain/local" form in the id column so
    # one table can span several domains.
    if "/" not in raw:
        raise ValueError(
            f"line {line_num}: profile id {raw!r} must be qualified as domain/local"
        )
    domain, local = raw.split("/", 1)
    if not domain or not local:
        raise ValueError(f"line {line_num}: malformed profile id {raw!r}")
    return ProfileId(domain, local)


def _cross_domain_profiles(
    snapshots: Sequence[DomainSnapshot],
) -> list[tuple[DomainSnapshot, DomainSnapshot]]:
    ordered = sorted(snapshots, key=lambda s: s.domain_id)
    pairs = []
    for i, left in enumerate(ordered):
        for right in ordered[i + 1:]:
            if left.domain_id != right.domain_id:
                pairs.append((left, right))
    return pairs


def _bucket_set(timeline: ActivityTimeline, resolution: float) -> frozenset[int]:
    return frozenset(
        np.floor_divide(timeline.times, resolution).astype(np.int64).tolist()
    )


def rank_activity_overlap(
    snapshots: Sequence[DomainSnapshot],
    resolution: float = DEFAULT_OVERLAP_RESOLUTION_SECONDS,
) -> list[PairScore]:
    """Rank all cross-domain pairs by 1 - activity_overlap, ascending.

    Bucket sets are built once per profile, not once per pair; the
    per-pair arithmetic is exactly activity_overlap on those sets.
    """
    if resolution <= 0:
        raise ValueError(f"resolution must be > 0, got {resolution}")
    buckets: dict[ProfileId, frozenset[int]] = {}
    for snapshot in snapshots:
        for timeline in snapshot.timelines.values():
            buckets[timeline.profile] = _bucket_set(timeline, resolution)
    scores = []
    for left_snap, right_snap in _cross_domain_profiles(snapshots):
        for left_id in sorted(left_snap.timelines):
            left = left_snap.timelines[left_id]
            set_left = buckets[left.profile]
            for right_id in sorted(right_snap.timelines):
                right = right_snap.timelines[right_id]
                set_right = buckets[right.profile]
                common = len(set_left & set_right)
                overlap = min(common / len(set_left), common / len(set_right))
                scores.append(
                    PairScore(
                        left=left.profile,
                        right=right.profile,
                        ks=1.0 - overlap,
                        p_value=math.nan,
                        gof=False,
                        composite=1.0 - overlap,
                        m=left.event_count - 1,
                        k=right.event_count - 1,
                    )
                )
    scores.sort(key=_pair_sort_key)
    return scores


def rank_embeddings(
    snapshots: Sequence[DomainSnapshot], table: EmbeddingTable
) -> tuple[list[PairScore], int]:
    """Rank cross-domain pairs by embedding distance, ascending.

    Zero distance (identical vectors, infinite score) naturally sorts
    first. Pairs with either endpoint missing from the table cannot be
    scored; their count is returned for the caller to report.
    """
    scores = []
    skipped = 0
    for left_snap, right_snap in _cross_domain_profiles(snapshots):
        for left_id in sorted(left_snap.timelines):
            left = left_snap.timelines[left_id]
            for right_id in sorted(right_snap.timelines):
                right = right_snap.timelines[right_id]
                e1 = table.vectors.get(left.profile)
                e2 = table.vectors.get(right.profile)
                if e1 is None or e2 is None:
                    skipped += 1
                    continue
                distance = float(np.linalg.norm(e1 - e2))
                scores.append(
                    PairScore(
                        left=left.profile,
                        right=right.profile,
                        ks=distance,
                        p_value=math.nan,
                        gof=False,
                        composite=distance,
                        m=left.event_count - 1,
                        k=right.event_count - 1,
                    )
                )
    scores.sort(key=_pair_sort_key)
    return scores, skipped


def load_embeddings(stream: IO) -> EmbeddingTable:
    """Load a CSV of profile_id,v0,v1,... rows into an embedding table.

    A header row is detected by a non-numeric second field and skipped.
    Every row must have the same vector dimension.
    """
    reader = csv.reader(_text_stream(stream))
    vectors: dict[ProfileId, np.ndarray] = {}
    dimension: int | None = None
    for line_num, row in enumerate(reader, start=1):
        if not row:
            continue
        if len(row) < 2:
            raise ValueError(f"line {line_num}: expected profile_id followed by values")
        if line_num == 1:
            try:
                float(row[1])
            except ValueError:
                continue  # header row
        try:
            vector = np.asarray([float(v) for v in row[1:]], dtype=np.float64)
        except ValueError as exc:
            raise ValueError(f"line {line_num}: unparsable float: {exc}") from None
        if not np.all(np.isfinite(vector)):
            raise ValueError(f"line {line_num}: non-finite embedding entry")
        if dimension is None:
            dimension = vector.size
        elif vector.size != dimension:
            raise ValueError(
                f"line {line_num}: dimension {vector.size} != table dimension {dimension}"
            )
        profile = _parse_profile_ref(row[0], line_num)
        if profile in vectors:
            raise ValueError(f"line {line_num}: duplicate embedding for {profile}")
        vector.setflags(write=False)
        vectors[profile] = vector
    return EmbeddingTable(vectors=vectors, dimension=dimension or 0)
