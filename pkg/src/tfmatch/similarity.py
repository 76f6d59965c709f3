"""Two-sample KS distance and the all-pairs matching engine.

Matching is a ranking problem: every cross-domain profile pair gets a
composite score built from the exact KS distance between the two gap
CDFs and a significance gate, and lower scores rank earlier. The gate
uses the closed-form critical value, so p-values are reporting-only.

The engine scores all cross-domain pairs, optionally skipping pairs
whose sketch lower bound already exceeds a caller-supplied threshold
(admissible, so the surviving set is identical to the exhaustive one).
Work is partitioned into (domain pair, left profile block) tasks; the
final sort key is a unique total order, so output is byte-identical for
any worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.special import kolmogorov

from .fingerprint import (
    DEFAULT_SKETCH_GRID,
    InterEventCDF,
    QuantileSketch,
    fingerprint_of,
)
from .model import DomainSnapshot, ProfileId

# Profiles per task; small enough to balance load, large enough that
# process overhead stays negligible.
_BLOCK_SIZE = 64


@dataclass(frozen=True)
class KSResult:
    """Exact two-sample KS statistic with its asymptotic p-value.

    m and k are the gap sample counts of the two sides. The p-value uses
    the asymptotic Kolmogorov distribution at effective size mk/(m+k);
    it is reported for inspection but never used for gating.
    """

    statistic: float
    p_value: float
    m: int
    k: int


@dataclass(frozen=True)
class PairScore:
    """One scored cross-domain pair; left.domain_id < right.domain_id."""

    left: ProfileId
    right: ProfileId
    ks: float
    p_value: float
    gof: bool
    composite: float
    m: int
    k: int


@dataclass(frozen=True)
class MatchConfig:
    """Engine settings. Tie-breaking is fixed lexicographic, not a knob."""

    alpha: float = 0.05
    prune_threshold: float | None = None
    workers: int = 1

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0,1), got {self.alpha}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.prune_threshold is not None and self.prune_threshold < 0:
            raise ValueError(f"prune_threshold must be >= 0, got {self.prune_threshold}")


def _ks_statistic(sorted_a: np.ndarray, sorted_b: np.ndarray) -> float:
    """Sup over all merged jump points of |Q_a - Q_b|.

    Both CDFs are step functions, so the supremum is attained at a jump
    point of one of them; evaluating at every merged point is exact.
    """
    points = np.concatenate((sorted_a, sorted_b))
    cdf_a = np.searchsorted(sorted_a, points, side="right") / sorted_a.size
    cdf_b = np.searchsorted(sorted_b, points, side="right") / sorted_b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def ks_distance(a: InterEventCDF, b: InterEventCDF) -> KSResult:
    """Exact KS distance between two gap CDFs."""
    if a.n == 0 or b.n == 0:
        raise ValueError("cannot compare an empty CDF")
    statistic = _ks_statistic(a.sorted_deltas, b.sorted_deltas)
    effective = a.n * b.n / (a.n + b.n)
    p_value = float(kolmogorov(statistic * math.sqrt(effective)))
    return KSResult(statistic=statistic, p_value=p_value, m=a.n, k=b.n)


def ks_critical_value(alpha: float, m: int, k: int) -> float:
    """Rejection threshold at significance alpha for sample sizes m, k.

    sqrt(-ln(alpha/2) * (1 + m/k) / (2m)); algebraically symmetric in
    (m, k) since -ln(alpha/2)*(1+m/k)/(2m) = -ln(alpha/2)*(m+k)/(2mk).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0,1), got {alpha}")
    if m < 1 or k < 1:
        raise ValueError(f"sample sizes must be >= 1, got m={m}, k={k}")
    # Evaluate via the symmetric form so ks_critical_value(a, m, k) and
    # ks_critical_value(a, k, m) are equal to the last bit.
    return math.sqrt(-math.log(alpha / 2.0) * (m + k) / (2.0 * m * k))


def gof_indicator(ks: float, alpha: float, m: int, k: int) -> bool:
    """True iff the null (same distribution) cannot be rejected."""
    return ks <= ks_critical_value(alpha, m, k)


def composite_score(ks: float, gof: bool) -> float:
    """Two-level sort collapsed into one ascending score.

    Accepted pairs (gof=true) occupy [0,1], rejected pairs [1,2]; within
    each block the KS distance orders pairs. With analysis-grade sample
    sizes the critical value is below 1, so the blocks cannot collide.
    """
    return (0.0 if gof else 1.0) + ks


def sketch_lower_bound(s1: QuantileSketch, s2: QuantileSketch) -> float:
    """Admissible lower bound on the exact KS distance; never exceeds it."""
    if s1.grid is not s2.grid and not np.array_equal(s1.grid, s2.grid):
        raise ValueError("sketches were built on different grids")
    return float(np.max(np.abs(s1.values - s2.values)))


def _score_block(
    task: tuple[
        str,
        str,
        list[tuple[str, np.ndarray]],
        list[tuple[str, np.ndarray]],
        float,
        float | None,
    ],
) -> list[tuple[str, str, float, float, bool, float, int, int]]:
    """Score one (left block) x (all right profiles) task.

    Module-level so it pickles for worker processes. Returns plain
    tuples; PairScore objects are assembled by the caller.
    """
    _left_domain, _right_domain, left_items, right_items, alpha, prune = task
    rows: list[tuple[str, str, float, float, bool, float, int, int]] = []
    if prune is not None:
        grid = DEFAULT_SKETCH_GRID
        right_sketches = [
            np.searchsorted(deltas, grid, side="right") / deltas.size
            for _lid, deltas in right_items
        ]
    for left_id, left_deltas in left_items:
        m = int(left_deltas.size)
        if prune is not None:
            left_sketch = np.searchsorted(left_deltas, grid, side="right") / m
        for j, (right_id, right_deltas) in enumerate(right_items):
            k = int(right_deltas.size)
            if prune is not None:
                bound = float(np.max(np.abs(left_sketch - right_sketches[j])))
                if bound > prune:
                    continue
            stat = _ks_statistic(left_deltas, right_deltas)
            effective = m * k / (m + k)
            p_value = float(kolmogorov(stat * math.sqrt(effective)))
            gof = stat <= ks_critical_value(alpha, m, k)
            if gof and stat >= 1.0:
                # Unreachable once samples are big enough that the
                # critical value sits below 1; a hit means the config
                # allowed degenerate sample sizes.
                raise AssertionError(
                    f"composite collision: ks={stat} accepted at m={m}, k={k}"
                )
            rows.append(
                (left_id, right_id, stat, p_value, gof, composite_score(stat, gof), m, k)
            )
    return rows


def _pair_sort_key(score: PairScore) -> tuple:
    return (
        score.composite,
        score.left.domain_id,
        score.left.local_id,
        score.right.domain_id,
        score.right.local_id,
    )


def _build_tasks(
    snapshots: Sequence[DomainSnapshot], cfg: MatchConfig
) -> list[tuple]:
    by_domain: dict[str, list[tuple[str, np.ndarray]]] = {}
    for snapshot in snapshots:
        items = by_domain.setdefault(snapshot.domain_id, [])
        for local_id in sorted(snapshot.timelines):
            cdf = fingerprint_of(snapshot.timelines[local_id])
            items.append((local_id, cdf.sorted_deltas))
    domains = sorted(by_domain)
    tasks = []
    for i, left_domain in enumerate(domains):
        for right_domain in domains[i + 1:]:
            left_items = by_domain[left_domain]
            right_items = by_domain[right_domain]
            for start in range(0, len(left_items), _BLOCK_SIZE):
                block = left_items[start : start + _BLOCK_SIZE]
                tasks.append(
                    (
                        left_domain,
                        right_domain,
                        block,
                        right_items,
                        cfg.alpha,
                        cfg.prune_threshold,
                    )
                )
    return tasks


def match_all(
    snapshots: Sequence[DomainSnapshot], cfg: MatchConfig | None = None
) -> list[PairScore]:
    """Score every cross-domain profile pair and rank ascending.

    Pairs within one domain are never candidates. With a prune threshold
    set, pairs whose sketch bound exceeds it are omitted; every omitted
    pair provably has exact KS above the threshold. Output order is a
    unique total key (composite, then lexicographic pair id), so results
    do not depend on the worker count.
    """
    if cfg is None:
        cfg = MatchConfig()
    if len({s.domain_id for s in snapshots}) < 2:
        raise ValueError("need snapshots from at least 2 distinct domains")
    tasks = _build_tasks(snapshots, cfg)
    results: list[PairScore] = []
    if cfg.workers == 1:
        chunks = map(_score_block, tasks)
    else:
        executor = ProcessPoolExecutor(max_workers=cfg.workers)
        chunks = executor.map(_score_block, tasks, chunksize=1)
    try:
        for task, rows in zip(tasks, chunks):
            left_domain, right_domain = task[0], task[1]
            for left_id, right_id, stat, p_value, gof, composite, m, k in rows:
                results.append(
                    PairScore(
                        left=ProfileId(left_domain, left_id),
                        right=ProfileId(right_domain, right_id),
                        ks=stat,
                        p_value=p_value,
                        gof=gof,
                        composite=composite,
                        m=m,
                        k=k,
                    )
                )
    finally:
        if cfg.workers > 1:
            executor.shutdown()
    results.sort(key=_pair_sort_key)
    return results


def top_k_candidates(
    ranked: Iterable[PairScore], k: int
) -> Mapping[ProfileId, list[ProfileId]]:
    """Best k counterparts per profile, in rank order.

    Every pair contributes to both endpoints: the ranked list is over
    unordered pairs, but candidate lists are per-profile views of it.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    candidates: dict[ProfileId, list[ProfileId]] = {}
    for score in ranked:
        left_list = candidates.setdefault(score.left, [])
        if len(left_list) < k:
            left_list.append(score.right)
        right_list = candidates.setdefault(score.right, [])
        if len(right_list) < k:
            right_list.append(score.left)
    return candidates
