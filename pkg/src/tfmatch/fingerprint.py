"""Inter-event time fingerprints.

A profile's behavioural fingerprint is the empirical distribution of gaps
between its consecutive events. Gaps are robust to clock offset between
domains (a constant shift cancels in the differences) and, unlike raw
activity sets, they do not require the two domains to log the same events.

The sketch variant evaluates the gap CDF on a fixed logarithmic grid so a
cheap vectorised comparison can rule out candidate pairs before the exact
test runs. The grid spans one second to one day: inter-event times are
heavy-tailed and bursty, so log spacing resolves the short-gap regime,
and gaps longer than a day cannot occur inside day-sliced timelines.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ActivityTimeline, ProfileId

SKETCH_GRID_POINTS = 32
SKETCH_GRID_MIN_SECONDS = 1.0
SKETCH_GRID_MAX_SECONDS = 86400.0

# Shared by every sketch built with default settings; comparing sketches
# from different grids is a usage error, not a numeric question.
DEFAULT_SKETCH_GRID = np.geomspace(
    SKETCH_GRID_MIN_SECONDS,
    SKETCH_GRID_MAX_SECONDS,
    SKETCH_GRID_POINTS,
)
DEFAULT_SKETCH_GRID.setflags(write=False)


@dataclass(frozen=True)
class InterEventSequence:
    """Consecutive gaps of one timeline, in event order.

    A timeline with n events yields n - 1 gaps. Zero gaps are legitimate
    (two events logged in the same second) and are kept as atoms at 0.
    """

    profile: ProfileId
    deltas: np.ndarray

    def __len__(self) -> int:
        return int(self.deltas.size)


@dataclass(frozen=True)
class InterEventCDF:
    """Right-continuous step CDF of a gap sample.

    Q(x) = |{delta <= x}| / n. Queries below the smallest gap return 0,
    queries at or above the largest return 1. Values are exact rational
    counts over n, never interpolated.
    """

    sorted_deltas: np.ndarray

    @property
    def n(self) -> int:
        return int(self.sorted_deltas.size)

    def evaluate(self, x: float | np.ndarray) -> float | np.ndarray:
        counts = np.searchsorted(self.sorted_deltas, x, side="right")
        result = counts / self.sorted_deltas.size
        if np.isscalar(x):
            return float(result)
        return result


@dataclass(frozen=True)
class QuantileSketch:
    """Gap CDF sampled on a fixed grid, plus the sample size behind it."""

    grid: np.ndarray
    values: np.ndarray
    n: int


def inter_event_sequence(timeline: ActivityTimeline) -> InterEventSequence:
    """Gaps deltas[i] = times[i+1] - times[i], order preserved."""
    if timeline.event_count < 2:
        raise ValueError(f"{timeline.profile}: need at least 2 events for gaps")
    deltas = np.diff(timeline.times)
    deltas.setflags(write=False)
    return InterEventSequence(profile=timeline.profile, deltas=deltas)


def empirical_cdf(sequence: InterEventSequence) -> InterEventCDF:
    if len(sequence) == 0:
        raise ValueError(f"{sequence.profile}: empty inter-event sequence")
    sorted_deltas = np.sort(sequence.deltas)
    sorted_deltas.setflags(write=False)
    return InterEventCDF(sorted_deltas=sorted_deltas)


def quantile_sketch(cdf: InterEventCDF, grid: np.ndarray = DEFAULT_SKETCH_GRID) -> QuantileSketch:
    """Evaluate the CDF at each grid breakpoint.

    The max absolute difference between two sketches on the same grid is
    a lower bound on the exact KS statistic: a step CDF is constant
    between jumps, so the difference at any grid point equals the
    difference at some merged jump point, which the exact statistic
    maximises over. Both paths compute values as count / n, so the bound
    also holds exactly in floating point.
    """
    grid = np.asarray(grid, dtype=np.float64)
    if grid.size == 0:
        raise ValueError("sketch grid must be non-empty")
    if np.any(np.diff(grid) < 0):
        raise ValueError("sketch grid must be ascending")
    values = np.asarray(cdf.evaluate(grid), dtype=np.float64)
    values.setflags(write=False)
    return QuantileSketch(grid=grid, values=values, n=cdf.n)


def fingerprint_of(timeline: ActivityTimeline) -> InterEventCDF:
    """Timeline straight to its gap CDF; the common call path."""
    return empirical_cdf(inter_event_sequence(timeline))
