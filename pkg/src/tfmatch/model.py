"""Core data types shared across the matching pipeline.

Timestamps are absolute seconds (float). Days are UTC-fixed buckets of
86400 seconds; all per-day slicing goes through day_of() so every module
agrees on bucket boundaries. No timezone or leap-second handling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping

import numpy as np

SECONDS_PER_DAY = 86400


def day_of(timestamp: float) -> int:
    """Map an absolute timestamp to its UTC day index."""
    if not math.isfinite(timestamp):
        raise ValueError(f"non-finite timestamp: {timestamp!r}")
    return math.floor(timestamp / SECONDS_PER_DAY)


@dataclass(frozen=True, order=True)
class ProfileId:
    """A profile reference qualified by the domain it lives in.

    Ordering is lexicographic on (domain_id, local_id), which is the tie
    break used everywhere ranked output has to be reproducible.
    """

    domain_id: str
    local_id: str

    def __str__(self) -> str:
        return f"{self.domain_id}/{self.local_id}"


@dataclass(frozen=True)
class DayWindow:
    """Half-open time window [start, end) covering one UTC day."""

    day_index: int

    @property
    def start(self) -> float:
        return float(self.day_index * SECONDS_PER_DAY)

    @property
    def end(self) -> float:
        return float((self.day_index + 1) * SECONDS_PER_DAY)

    def contains(self, timestamp: float) -> bool:
        return self.start <= timestamp < self.end


@dataclass(frozen=True)
class ActivityTimeline:
    """Sorted event timestamps for one profile on one day.

    The times array is validated once at construction and frozen; every
    downstream consumer may assume ascending order without re-checking.
    Two events is the floor at which an inter-event distribution exists
    at all; analysis-grade minimums are enforced by ingest config.

    Containment in the day window is deliberately not an invariant here:
    noise injection may push events past the window edges and the method
    is expected to keep working on the perturbed timelines.
    """

    profile: ProfileId
    day: DayWindow
    times: np.ndarray

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=np.float64)
        if times.ndim != 1:
            raise ValueError(f"{self.profile}: times must be 1-d, got shape {times.shape}")
        if times.size < 2:
            raise ValueError(f"{self.profile}: need at least 2 events, got {times.size}")
        if not np.all(np.isfinite(times)):
            raise ValueError(f"{self.profile}: non-finite timestamps present")
        if np.any(np.diff(times) < 0):
            raise ValueError(f"{self.profile}: timestamps must be sorted ascending")
        times = times.copy()
        times.setflags(write=False)
        object.__setattr__(self, "times", times)

    @property
    def event_count(self) -> int:
        return int(self.times.size)

    @property
    def span(self) -> float:
        return float(self.times[-1] - self.times[0])


@dataclass(frozen=True)
class DomainSnapshot:
    """All timelines observed in one domain over one day."""

    domain_id: str
    day: DayWindow
    timelines: Mapping[str, ActivityTimeline] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for local_id, timeline in self.timelines.items():
            if timeline.profile.domain_id != self.domain_id:
                raise ValueError(
                    f"timeline {timeline.profile} filed under domain {self.domain_id}"
                )
            if timeline.profile.local_id != local_id:
                raise ValueError(f"timeline {timeline.profile} keyed as {local_id}")
            if timeline.day != self.day:
                raise ValueError(
                    f"timeline {timeline.profile} is for day {timeline.day.day_index}, "
                    f"snapshot covers day {self.day.day_index}"
                )

    def __len__(self) -> int:
        return len(self.timelines)

    def profiles(self) -> Iterator[ProfileId]:
        for timeline in self.timelines.values():
            yield timeline.profile


@dataclass(frozen=True)
class GroundTruth:
    """Entity labels: which owner each labelled profile belongs to.

    Profiles without a label simply do not appear in the map; they stay
    valid match candidates but contribute no correct pairs.
    """

    entity_of: Mapping[ProfileId, str]

    def correct_pairs(self) -> frozenset[frozenset[ProfileId]]:
        """All unordered cross-domain profile pairs sharing an entity."""
        by_entity: dict[str, list[ProfileId]] = {}
        for profile, entity in self.entity_of.items():
            by_entity.setdefault(entity, []).append(profile)
        pairs: set[frozenset[ProfileId]] = set()
        for members in by_entity.values():
            members.sort()
            for i, a in enumerate(members):
                for b in members[i + 1:]:
                    if a.domain_id != b.domain_id:
                        pairs.add(frozenset((a, b)))
        return frozenset(pairs)

    def __len__(self) -> int:
        return len(self.entity_of)
