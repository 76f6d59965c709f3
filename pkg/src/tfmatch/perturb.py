"""Gaussian noise injection for robustness experiments.

Each timestamp gets an independent N(mu, sigma^2) displacement; the
timeline is re-sorted and kept whole. Events pushed past the day edges
stay in: dropping them would shrink the gap sample and silently move the
significance threshold, which is exactly what the robustness experiment
must not do.

Noise streams are derived per profile from (seed, profile id), so one
profile's noisy timeline does not change when other profiles are added
to or removed from the population.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import ActivityTimeline, DomainSnapshot, ProfileId


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float
    mu: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")


def _profile_rng(spec: NoiseSpec, profile: ProfileId) -> np.random.Generator:
    key = f"{spec.seed}:{profile.domain_id}:{profile.local_id}".encode()
    digest = hashlib.sha256(key).digest()
    return np.random.default_rng(np.random.SeedSequence(int.from_bytes(digest[:16], "big")))


def inject_noise(timeline: ActivityTimeline, spec: NoiseSpec) -> ActivityTimeline:
    """Perturb every timestamp independently; re-sort; keep all events."""
    rng = _profile_rng(spec, timeline.profile)
    noisy = timeline.times + rng.normal(spec.mu, spec.sigma, size=timeline.event_count)
    return ActivityTimeline(
        profile=timeline.profile, day=timeline.day, times=np.sort(noisy)
    )


def inject_noise_snapshot(snapshot: DomainSnapshot, spec: NoiseSpec) -> DomainSnapshot:
    return DomainSnapshot(
        domain_id=snapshot.domain_id,
        day=snapshot.day,
        timelines={
            local_id: inject_noise(timeline, spec)
            for local_id, timeline in snapshot.timelines.items()
        },
    )


def inject_noise_all(
    snapshots: Sequence[DomainSnapshot], spec: NoiseSpec
) -> list[DomainSnapshot]:
    return [inject_noise_snapshot(snapshot, spec) for snapshot in snapshots]
