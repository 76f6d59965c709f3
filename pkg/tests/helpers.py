"""Small constructors shared across test modules."""

from __future__ import annotations

import numpy as np

from tfmatch.fingerprint import InterEventCDF
from tfmatch.model import ActivityTimeline, DayWindow, DomainSnapshot, GroundTruth, ProfileId


def make_timeline(domain: str, local: str, times, day: int = 0) -> ActivityTimeline:
    return ActivityTimeline(
        profile=ProfileId(domain, local),
        day=DayWindow(day),
        times=np.asarray(times, dtype=np.float64),
    )


def make_snapshots(population: dict, day: int = 0) -> list[DomainSnapshot]:
    """population: {domain: {local: times}} -> one snapshot per domain."""
    snapshots = []
    for domain in sorted(population):
        timelines = {
            local: make_timeline(domain, local, times, day)
            for local, times in population[domain].items()
        }
        snapshots.append(DomainSnapshot(domain_id=domain, day=DayWindow(day), timelines=timelines))
    return snapshots


def cdf_of(values) -> InterEventCDF:
    """A gap CDF straight from raw values, bypassing timeline assembly."""
    return InterEventCDF(sorted_deltas=np.sort(np.asarray(values, dtype=np.float64)))


def truth_of(**entities: list[tuple[str, str]]) -> GroundTruth:
    """truth_of(e1=[('D0', 'a'), ('D1', 'b')]) -> GroundTruth."""
    mapping = {}
    for entity, profiles in entities.items():
        for domain, local in profiles:
            mapping[ProfileId(domain, local)] = entity
    return GroundTruth(entity_of=mapping)
