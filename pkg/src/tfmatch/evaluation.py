"""Ranking evaluation: AUC, precision views, volume slices, stability.

All metrics operate on a ranked pair list plus ground truth. Pairs with
an unlabeled endpoint stay in the ranking (they are real distractors for
candidate lists) but are excluded from metric numerators/denominators,
since their correctness is unknowable.

Conventions that the underlying formulas leave open are pinned here and
echoed in report metadata:
  - precision@k credits each unordered true pair once, from the
    lexicographically smaller endpoint, keeping values in [0, 1].
  - average precision integrates the stored precision-recall curve
    trapezoidally, anchored at recall 0 with the first stored precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .fingerprint import fingerprint_of
from .model import DomainSnapshot, GroundTruth, ProfileId
from .similarity import PairScore, _ks_statistic

# Daily-volume category boundaries; the last category is open-ended.
VOLUME_BOUNDARIES = (20, 100, 250, 500, 1000)


@dataclass(frozen=True)
class VolumeCategory:
    """Half-open daily activity-count band [lower, upper)."""

    lower: float
    upper: float

    def __post_init__(self) -> None:
        if not self.lower < self.upper:
            raise ValueError(f"need lower < upper, got [{self.lower}, {self.upper})")

    def contains(self, volume: float) -> bool:
        return self.lower <= volume < self.upper

    def label(self) -> str:
        if math.isinf(self.upper):
            return f"{self.lower:g}+"
        return f"{self.lower:g}-{self.upper:g}"


DEFAULT_VOLUME_CATEGORIES = tuple(
    VolumeCategory(lower, upper)
    for lower, upper in zip(VOLUME_BOUNDARIES, VOLUME_BOUNDARIES[1:] + (math.inf,))
)


@dataclass(frozen=True)
class RankedPairs:
    """Ranked output of one identity function, best pair first."""

    method: str
    pairs: tuple[PairScore, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "pairs", tuple(self.pairs))

    def __len__(self) -> int:
        return len(self.pairs)


def _pair_key(score: PairScore) -> frozenset[ProfileId]:
    return frozenset((score.left, score.right))


def _labeled_subsequence(
    ranked: RankedPairs, truth: GroundTruth
) -> tuple[list[PairScore], list[bool]]:
    """Ranked pairs with both endpoints labeled, plus their truth flags."""
    positives = truth.correct_pairs()
    pairs: list[PairScore] = []
    flags: list[bool] = []
    for score in ranked.pairs:
        if score.left in truth.entity_of and score.right in truth.entity_of:
            pairs.append(score)
            flags.append(_pair_key(score) in positives)
    return pairs, flags


def auc(ranked: RankedPairs, truth: GroundTruth) -> float:
    """Mid-rank Mann-Whitney AUC of true pairs over false pairs.

    Computed on the negated composite so that higher means more likely a
    match; any strictly monotone transform of the score leaves the value
    unchanged, because only ranks enter.
    """
    pairs, flags = _labeled_subsequence(ranked, truth)
    labels = np.asarray(flags, dtype=bool)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError(f"AUC needs both classes, got {n_pos} positives, {n_neg} negatives")
    scores = -np.asarray([p.composite for p in pairs])
    ranks = rankdata(scores, method="average")
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def precision_top_n(ranked: RankedPairs, truth: GroundTruth, n: int) -> float:
    """Fraction of the n best labeled pairs that are true pairs."""
    if n <= 0:
        raise ValueError(f"n must be >= 1, got {n}")
    pairs, flags = _labeled_subsequence(ranked, truth)
    if n > len(pairs):
        raise ValueError(f"n={n} exceeds {len(pairs)} labeled ranked pairs")
    return sum(flags[:n]) / n


def precision_at_k(
    candidates: Mapping[ProfileId, Sequence[ProfileId]],
    truth: GroundTruth,
    k: int,
) -> float:
    """Fraction of true pairs recovered within per-profile top-k lists.

    Each unordered true pair {a, b} is credited once, from the smaller
    endpoint a: it counts iff b appears among a's k best candidates.
    """
    if k <= 0:
        raise ValueError(f"k must be >= 1, got {k}")
    positives = truth.correct_pairs()
    if not positives:
        raise ValueError("ground truth contains no cross-domain pairs")
    hits = 0
    for pair in positives:
        a, b = sorted(pair)
        if b in tuple(candidates.get(a, ()))[:k]:
            hits += 1
    return hits / len(positives)


def volumes_from_scores(pairs: Iterable[PairScore]) -> dict[ProfileId, int]:
    """Per-profile daily event counts recovered from scored pair sizes.

    A profile's gap sample size is its event count minus one, so any
    scored pair reveals both endpoint volumes.
    """
    volumes: dict[ProfileId, int] = {}
    for score in pairs:
        for profile, gaps in ((score.left, score.m), (score.right, score.k)):
            if gaps <= 0:
                raise ValueError(f"{profile}: missing sample size; supply volumes explicitly")
            volumes[profile] = gaps + 1
    return volumes


@dataclass(frozen=True)
class CategoryReport:
    """Precision-recall behaviour of one volume category."""

    category: VolumeCategory
    n_pairs: int
    n_true: int
    precision_curve: tuple[float, ...]
    recall_curve: tuple[float, ...]
    average_precision: float


def _average_precision(precision: Sequence[float], recall: Sequence[float]) -> float:
    # Anchor at recall 0 so a perfect ranking integrates to exactly 1.
    p = np.concatenate(([precision[0]], precision))
    r = np.concatenate(([0.0], recall))
    return float(np.sum((r[1:] - r[:-1]) * (p[1:] + p[:-1])) / 2.0)


def category_metrics(
    ranked: RankedPairs,
    truth: GroundTruth,
    volumes: Mapping[ProfileId, int] | None = None,
    categories: Sequence[VolumeCategory] = DEFAULT_VOLUME_CATEGORIES,
) -> list[CategoryReport]:
    """Per-category precision/recall curves and average precision.

    A pair belongs to a category iff both endpoint volumes fall in it;
    cross-category pairs are not assigned anywhere. Categories with no
    pairs or no true pairs are omitted rather than reported as zero.
    """
    if volumes is None:
        volumes = volumes_from_scores(ranked.pairs)
    pairs, flags = _labeled_subsequence(ranked, truth)
    reports = []
    for category in categories:
        in_cat = [
            (score, flag)
            for score, flag in zip(pairs, flags)
            if score.left in volumes
            and score.right in volumes
            and category.contains(volumes[score.left])
            and category.contains(volumes[score.right])
        ]
        n_true = sum(flag for _score, flag in in_cat)
        if not in_cat or n_true == 0:
            continue
        precision: list[float] = []
        recall: list[float] = []
        hits = 0
        for position, (_score, flag) in enumerate(in_cat, start=1):
            hits += int(flag)
            precision.append(hits / position)
            recall.append(hits / n_true)
        reports.append(
            CategoryReport(
                category=category,
                n_pairs=len(in_cat),
                n_true=n_true,
                precision_curve=tuple(precision),
                recall_curve=tuple(recall),
                average_precision=_average_precision(precision, recall),
            )
        )
    return reports


def synchronized_set(
    ranked: RankedPairs, truth: GroundTruth, rho: float
) -> set[frozenset[ProfileId]]:
    """True pairs whose KS distance is at most rho."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must be in [0,1], got {rho}")
    positives = truth.correct_pairs()
    return {
        _pair_key(score)
        for score in ranked.pairs
        if score.ks <= rho and _pair_key(score) in positives
    }


def identification_probability(
    ranked: RankedPairs,
    truth: GroundTruth,
    rho: float,
    volume_bins: Sequence[VolumeCategory] = DEFAULT_VOLUME_CATEGORIES,
    volumes: Mapping[ProfileId, int] | None = None,
) -> dict[VolumeCategory, float]:
    """Chance a profile with a true counterpart is synchronized, per volume bin.

    For each bin: the fraction of truth-paired profiles with volume in
    the bin that have at least one counterpart pair with KS <= rho.
    Bins with no such profiles are absent from the result.
    """
    if volumes is None:
        volumes = volumes_from_scores(ranked.pairs)
    synced = synchronized_set(ranked, truth, rho)
    synced_profiles = {profile for pair in synced for profile in pair}
    paired_profiles = {profile for pair in truth.correct_pairs() for profile in pair}
    table: dict[VolumeCategory, float] = {}
    for bin_ in volume_bins:
        members = [
            p for p in paired_profiles if p in volumes and bin_.contains(volumes[p])
        ]
        if not members:
            continue
        identified = sum(p in synced_profiles for p in members)
        table[bin_] = identified / len(members)
    return table


def ks_drift(
    pair: tuple[ProfileId, ProfileId],
    snapshots_by_day: Mapping[int, Sequence[DomainSnapshot]],
) -> dict[int, float]:
    """|KS at day t0+T minus KS at day t0| for each observed offset T.

    t0 is the earliest day in the input. Days where either profile is
    missing (below the activity bar) are gaps: absent keys, not zeros.
    """
    if not snapshots_by_day:
        raise ValueError("no snapshots supplied")
    left, right = pair

    def _gaps_for(day: int, profile: ProfileId) -> np.ndarray | None:
        for snapshot in snapshots_by_day[day]:
            if snapshot.domain_id == profile.domain_id:
                timeline = snapshot.timelines.get(profile.local_id)
                if timeline is not None:
                    return fingerprint_of(timeline).sorted_deltas
        return None

    days = sorted(snapshots_by_day)
    t0 = days[0]
    series: dict[int, float] = {}
    baseline: float | None = None
    for day in days:
        gaps_left = _gaps_for(day, left)
        gaps_right = _gaps_for(day, right)
        if gaps_left is None or gaps_right is None:
            if day == t0:
                raise ValueError(f"pair {left}, {right} absent at first day {t0}")
            continue
        ks = _ks_statistic(gaps_left, gaps_right)
        if baseline is None:
            baseline = ks
        series[day - t0] = abs(ks - baseline)
    return series


@dataclass(frozen=True)
class DayAggregate:
    mean: float
    standard_error: float | None
    days: int


def aggregate_days(daily: Sequence[Mapping[str, float]]) -> dict[str, DayAggregate]:
    """Mean and standard error (std/sqrt(days)) per metric across days.

    With a single day the standard error is undefined and reported as
    absent, not zero.
    """
    if not daily:
        raise ValueError("need at least one daily report")
    keys: dict[str, list[float]] = {}
    for report in daily:
        for key, value in report.items():
            keys.setdefault(key, []).append(float(value))
    aggregated = {}
    for key, values in keys.items():
        n = len(values)
        se = None if n < 2 else float(np.std(values, ddof=1) / math.sqrt(n))
        aggregated[key] = DayAggregate(mean=float(np.mean(values)), standard_error=se, days=n)
    return aggregated


# ---------------------------------------------------------------------------
# Report assembly


@dataclass(frozen=True)
class MetricReport:
    """One day's evaluation of one ranked output, JSON-serializable."""

    method: str
    pairs_total: int
    pairs_labeled: int
    positives: int
    auc: float
    precision_top: dict[int, float]
    precision_at_k: dict[int, float]
    categories: list[CategoryReport] = field(default_factory=list)
    identification: dict[str, dict[str, float]] = field(default_factory=dict)
    conventions: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "pairs_total": self.pairs_total,
            "pairs_labeled": self.pairs_labeled,
            "positives": self.positives,
            "auc": self.auc,
            "precision_top": {str(n): v for n, v in sorted(self.precision_top.items())},
            "precision_at_k": {str(k): v for k, v in sorted(self.precision_at_k.items())},
            "categories": [
                {
                    "volume": report.category.label(),
                    "pairs": report.n_pairs,
                    "true_pairs": report.n_true,
                    "average_precision": report.average_precision,
                }
                for report in self.categories
            ],
            "identification": self.identification,
            "conventions": dict(sorted(self.conventions.items())),
        }


CONVENTIONS = {
    "precision_at_k": "each true pair credited once, from the lexicographically smaller endpoint",
    "auc": "mid-rank Mann-Whitney on negated composite; unlabeled pairs excluded",
    "average_precision": "trapezoidal over stored curve, anchored at recall 0",
}


def compute_report(
    ranked: RankedPairs,
    truth: GroundTruth,
    top_n: Sequence[int] = (10, 100),
    k_values: Sequence[int] = (1, 5, 10),
    rho_values: Sequence[float] = (0.05,),
    volumes: Mapping[ProfileId, int] | None = None,
    volume_bins: Sequence[VolumeCategory] = DEFAULT_VOLUME_CATEGORIES,
) -> MetricReport:
    """Standard single-day evaluation bundle over one ranked output."""
    from .similarity import top_k_candidates

    pairs, flags = _labeled_subsequence(ranked, truth)
    max_k = max(k_values) if k_values else 0
    candidates = top_k_candidates(ranked.pairs, max_k) if max_k else {}
    identification: dict[str, dict[str, float]] = {}
    if volumes is None:
        try:
            volumes = volumes_from_scores(ranked.pairs)
        except ValueError:
            volumes = None
    if volumes is not None:
        for rho in rho_values:
            table = identification_probability(ranked, truth, rho, volume_bins, volumes)
            identification[f"{rho:g}"] = {
                bin_.label(): value for bin_, value in table.items()
            }
    return MetricReport(
        method=ranked.method,
        pairs_total=len(ranked),
        pairs_labeled=len(pairs),
        positives=sum(flags),
        auc=auc(ranked, truth),
        precision_top={
            n: precision_top_n(ranked, truth, n) for n in top_n if 0 < n <= len(pairs)
        },
        precision_at_k={k: precision_at_k(candidates, truth, k) for k in k_values},
        categories=(
            category_metrics(ranked, truth, volumes) if volumes is not None else []
        ),
        identification=identification,
        conventions=dict(CONVENTIONS),
    )


def roc_points(ranked: RankedPairs, truth: GroundTruth) -> list[tuple[float, float]]:
    """(false positive rate, true positive rate) per ranking prefix."""
    _pairs, flags = _labeled_subsequence(ranked, truth)
    n_pos = sum(flags)
    n_neg = len(flags) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both classes")
    points = [(0.0, 0.0)]
    tp = fp = 0
    for flag in flags:
        if flag:
            tp += 1
        else:
            fp += 1
        points.append((fp / n_neg, tp / n_pos))
    return points


def precision_curve_points(
    ranked: RankedPairs, truth: GroundTruth
) -> list[tuple[int, float]]:
    """(n, precision of best n labeled pairs) for every prefix length."""
    _pairs, flags = _labeled_subsequence(ranked, truth)
    points = []
    hits = 0
    for position, flag in enumerate(flags, start=1):
        hits += int(flag)
        points.append((position, hits / position))
    return points
