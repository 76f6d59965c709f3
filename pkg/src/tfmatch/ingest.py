"""Event log parsing and daily snapshot assembly.

Input is a flat event log: one row per activity with a timestamp, the
domain it happened in, and the acting profile. An optional entity column
carries ground truth (e.g. a wallet address that is both the local and
the global identifier); a separate truth mapping file is also accepted.

Parsing is strict: the first malformed row aborts ingestion with its
line number. Silent row dropping makes downstream metrics quietly wrong,
which is worse than failing loudly.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .model import ActivityTimeline, DayWindow, DomainSnapshot, GroundTruth, ProfileId

EVENT_FORMATS = ("csv", "jsonl")
_REQUIRED_COLUMNS = ("timestamp", "domain_id", "profile_id")


@dataclass(frozen=True)
class EventRecord:
    """One parsed activity row."""

    timestamp: float
    domain_id: str
    profile_local_id: str
    entity_id: str | None = None


def _text_stream(stream: IO) -> IO[str]:
    if isinstance(stream, io.TextIOBase):
        return stream
    if hasattr(stream, "read") and isinstance(stream.read(0), bytes):
        return io.TextIOWrapper(stream, encoding="utf-8")
    return stream


def _parse_timestamp(raw: object, line_num: int) -> float:
    try:
        value = float(raw)  # type: ignore[arg-type]
    except (TypeError, ValueError):
        raise ValueError(f"line {line_num}: unparsable timestamp {raw!r}") from None
    if not math.isfinite(value):
        raise ValueError(f"line {line_num}: non-finite timestamp {raw!r}")
    return value


def _require_id(raw: object, column: str, line_num: int) -> str:
    if not isinstance(raw, str) or raw == "":
        raise ValueError(f"line {line_num}: missing or empty {column}")
    return raw


def _parse_csv(stream: IO[str]) -> list[EventRecord]:
    reader = csv.DictReader(stream)
    if reader.fieldnames is None:
        return []
    missing = [c for c in _REQUIRED_COLUMNS if c not in reader.fieldnames]
    if missing:
        raise ValueError(f"line 1: missing required column(s): {', '.join(missing)}")
    records = []
    for row in reader:
        line_num = reader.line_num
        if None in row and row[None]:
            raise ValueError(f"line {line_num}: more fields than header columns")
        entity = row.get("entity_id") or None
        records.append(
            EventRecord(
                timestamp=_parse_timestamp(row["timestamp"], line_num),
                domain_id=_require_id(row["domain_id"], "domain_id", line_num),
                profile_local_id=_require_id(row["profile_id"], "profile_id", line_num),
                entity_id=entity,
            )
        )
    return records


def _parse_jsonl(stream: IO[str]) -> list[EventRecord]:
    records = []
    for line_num, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"line {line_num}: invalid JSON: {exc.msg}") from None
        if not isinstance(obj, dict):
            raise ValueError(f"line {line_num}: expected an object per line")
        for column in _REQUIRED_COLUMNS:
            if column not in obj:
                raise ValueError(f"line {line_num}: missing required key {column!r}")
        entity = obj.get("entity_id") or None
        records.append(
            EventRecord(
                timestamp=_parse_timestamp(obj["timestamp"], line_num),
                domain_id=_require_id(obj["domain_id"], "domain_id", line_num),
                profile_local_id=_require_id(obj["profile_id"], "profile_id", line_num),
                entity_id=entity,
            )
        )
    return records


def parse_events(stream: IO, format: str) -> list[EventRecord]:
    """Parse an event log from a byte or text stream.

    CSV needs a header row with timestamp,domain_id,profile_id and an
    optional entity_id column; JSONL uses the same keys per line.
    """
    if format not in EVENT_FORMATS:
        raise ValueError(f"unknown format {format!r}, expected one of {EVENT_FORMATS}")
    text = _text_stream(stream)
    if format == "csv":
        return _parse_csv(text)
    return _parse_jsonl(text)


def parse_events_path(path: str | Path, format: str | None = None) -> list[EventRecord]:
    """Parse an event log file, inferring the format from the suffix."""
    path = Path(path)
    if format is None:
        suffix = path.suffix.lower().lstrip(".")
        if suffix not in EVENT_FORMATS:
            raise ValueError(
                f"cannot infer format from suffix {path.suffix!r}; pass format explicitly"
            )
        format = suffix
    with open(path, "rb") as stream:
        return parse_events(stream, format)


def parse_truth(stream: IO) -> dict[ProfileId, str]:
    """Parse a separate truth mapping: domain_id,profile_id,entity_id CSV."""
    reader = csv.DictReader(_text_stream(stream))
    required = ("domain_id", "profile_id", "entity_id")
    if reader.fieldnames is None:
        return {}
    missing = [c for c in required if c not in reader.fieldnames]
    if missing:
        raise ValueError(f"line 1: missing required column(s): {', '.join(missing)}")
    mapping: dict[ProfileId, str] = {}
    for row in reader:
        line_num = reader.line_num
        profile = ProfileId(
            _require_id(row["domain_id"], "domain_id", line_num),
            _require_id(row["profile_id"], "profile_id", line_num),
        )
        entity = _require_id(row["entity_id"], "entity_id", line_num)
        if mapping.get(profile, entity) != entity:
            raise ValueError(f"line {line_num}: conflicting entity for {profile}")
        mapping[profile] = entity
    return mapping


def build_snapshots(
    events: Iterable[EventRecord],
    day_index: int,
    min_activity: int = 20,
    extra_truth: Mapping[ProfileId, str] | None = None,
) -> tuple[list[DomainSnapshot], GroundTruth]:
    """Slice one day out of an event log and assemble per-domain snapshots.

    Only profiles with at least min_activity events inside the day
    survive; everything else is dropped for that day. Ground truth keeps
    labels for surviving profiles only, so the derived correct-pair set
    ranges over actual candidates. Events outside the window are skipped
    (multi-day exports are the normal case).
    """
    if min_activity < 2:
        raise ValueError(f"min_activity must be >= 2, got {min_activity}")
    window = DayWindow(day_index)
    times_by_profile: dict[ProfileId, list[float]] = {}
    labels: dict[ProfileId, str] = {}
    for record in events:
        if not window.contains(record.timestamp):
            continue
        profile = ProfileId(record.domain_id, record.profile_local_id)
        times_by_profile.setdefault(profile, []).append(record.timestamp)
        if record.entity_id is not None:
            if labels.get(profile, record.entity_id) != record.entity_id:
                raise ValueError(
                    f"{profile}: conflicting entity labels "
                    f"{labels[profile]!r} and {record.entity_id!r}"
                )
            labels[profile] = record.entity_id
    if extra_truth:
        for profile, entity in extra_truth.items():
            if labels.get(profile, entity) != entity:
                raise ValueError(
                    f"{profile}: truth file label {entity!r} conflicts with "
                    f"inline label {labels[profile]!r}"
                )
            labels[profile] = entity

    by_domain: dict[str, dict[str, ActivityTimeline]] = {}
    surviving: set[ProfileId] = set()
    for profile in sorted(times_by_profile):
        times = times_by_profile[profile]
        if len(times) < min_activity:
            continue
        timeline = ActivityTimeline(
            profile=profile, day=window, times=np.sort(np.asarray(times))
        )
        by_domain.setdefault(profile.domain_id, {})[profile.local_id] = timeline
        surviving.add(profile)

    snapshots = [
        DomainSnapshot(domain_id=domain, day=window, timelines=timelines)
        for domain, timelines in sorted(by_domain.items())
    ]
    truth = GroundTruth(
        entity_of={p: e for p, e in labels.items() if p in surviving}
    )
    return snapshots, truth


def active_days(events: Sequence[EventRecord]) -> list[int]:
    """Sorted day indices that have at least one event."""
    from .model import day_of

    return sorted({day_of(record.timestamp) for record in events})
