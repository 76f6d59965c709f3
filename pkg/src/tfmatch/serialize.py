"""File formats: ranked CSV, event/truth CSVs, manifests.

Everything here is written for byte-identical regeneration: floats use
repr (shortest round-trip form), rows follow deterministic orders fixed
by the callers, JSON is sorted and indented, and no file ever embeds a
timestamp or hostname.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

from .ingest import EventRecord, _text_stream
from .model import DomainSnapshot, GroundTruth, ProfileId
from .similarity import PairScore

RANKED_COLUMNS = (
    "domain1",
    "profile1",
    "domain2",
    "profile2",
    "ks",
    "p_value",
    "gof",
    "composite",
    "rank",
)


def format_float(value: float) -> str:
    return repr(float(value))


def write_ranked_csv(path: str | Path, scores: Sequence[PairScore]) -> None:
    """Ranked pair output; rank is the 1-based position in the list."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(RANKED_COLUMNS)
        for rank, score in enumerate(scores, start=1):
            writer.writerow(
                (
                    score.left.domain_id,
                    score.left.local_id,
                    score.right.domain_id,
                    score.right.local_id,
                    format_float(score.ks),
                    format_float(score.p_value),
                    "true" if score.gof else "false",
                    format_float(score.composite),
                    rank,
                )
            )


def read_ranked_csv(stream_or_path: IO | str | Path) -> list[PairScore]:
    """Load a ranked CSV back into PairScore objects.

    Gap sample sizes are not part of the file contract; loaded scores
    carry m = k = 0, and volume-based metrics need an explicit profile
    volume sidecar (see write_profiles_csv).
    """
    if isinstance(stream_or_path, (str, Path)):
        with open(stream_or_path, "rb") as handle:
            return read_ranked_csv(handle)
    reader = csv.DictReader(_text_stream(stream_or_path))
    missing = [c for c in RANKED_COLUMNS if c not in (reader.fieldnames or ())]
    if missing:
        raise ValueError(f"ranked file missing column(s): {', '.join(missing)}")
    scores = []
    for row in reader:
        scores.append(
            PairScore(
                left=ProfileId(row["domain1"], row["profile1"]),
                right=ProfileId(row["domain2"], row["profile2"]),
                ks=float(row["ks"]),
                p_value=float(row["p_value"]),
                gof=row["gof"] == "true",
                composite=float(row["composite"]),
                m=0,
                k=0,
            )
        )
    return scores


def write_events_csv(path: str | Path, records: Iterable[EventRecord]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(("timestamp", "domain_id", "profile_id", "entity_id"))
        for record in records:
            writer.writerow(
                (
                    format_float(record.timestamp),
                    record.domain_id,
                    record.profile_local_id,
                    record.entity_id or "",
                )
            )


def write_truth_csv(path: str | Path, truth: GroundTruth) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(("domain_id", "profile_id", "entity_id"))
        for profile in sorted(truth.entity_of):
            writer.writerow((profile.domain_id, profile.local_id, truth.entity_of[profile]))


def write_profiles_csv(path: str | Path, snapshots: Sequence[DomainSnapshot]) -> None:
    """Per-profile daily volumes; the sidecar for volume-sliced metrics."""
    rows = []
    for snapshot in snapshots:
        for timeline in snapshot.timelines.values():
            rows.append((timeline.profile, timeline.event_count))
    rows.sort()
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(("domain_id", "profile_id", "events"))
        for profile, events in rows:
            writer.writerow((profile.domain_id, profile.local_id, events))


def read_profiles_csv(stream_or_path: IO | str | Path) -> dict[ProfileId, int]:
    if isinstance(stream_or_path, (str, Path)):
        with open(stream_or_path, "rb") as handle:
            return read_profiles_csv(handle)
    reader = csv.DictReader(_text_stream(stream_or_path))
    volumes = {}
    for row in reader:
        volumes[ProfileId(row["domain_id"], row["profile_id"])] = int(row["events"])
    return volumes


def write_rows_csv(
    path: str | Path, header: Sequence[str], rows: Iterable[Sequence[object]]
) -> None:
    """Small plot-data tables (roc.csv and friends)."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [format_float(v) if isinstance(v, float) else v for v in row]
            )


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _jsonable(value: object) -> object:
    """Recursively rewrite a payload into strict-JSON-safe values.

    Non-finite floats become strings ("nan", "inf", "-inf"); the stock
    encoder would emit bare NaN, which strict parsers reject.
    """
    if isinstance(value, Mapping):
        return {str(key): _jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    if isinstance(value, Path):
        return str(value)
    return value


def write_json(path: str | Path, payload: Mapping) -> None:
    text = json.dumps(_jsonable(payload), sort_keys=True, indent=2, allow_nan=False)
    Path(path).write_text(text + "\n")


def write_manifest(
    outdir: str | Path,
    command: str,
    config: Mapping[str, object],
    inputs: Mapping[str, str | Path],
    output_names: Sequence[str],
) -> Path:
    """Record everything needed to re-run the command bit-identically.

    Inputs are named paths whose content digests are captured; outputs
    are files inside outdir, digested after they were written.
    """
    from . import __version__

    outdir = Path(outdir)
    manifest = {
        "command": command,
        "version": __version__,
        "config": {key: _jsonable(value) for key, value in sorted(config.items())},
        "inputs": {name: sha256_file(path) for name, path in sorted(inputs.items())},
        "outputs": {name: sha256_file(outdir / name) for name in sorted(output_names)},
    }
    path = outdir / "manifest.json"
    write_json(path, manifest)
    return path
