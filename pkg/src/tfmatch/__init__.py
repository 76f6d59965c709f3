"""Cross-domain profile matching from inter-event time fingerprints."""

from .model import (
    SECONDS_PER_DAY,
    ActivityTimeline,
    DayWindow,
    DomainSnapshot,
    GroundTruth,
    ProfileId,
    day_of,
)
from .fingerprint import (
    InterEventCDF,
    InterEventSequence,
    QuantileSketch,
    empirical_cdf,
    fingerprint_of,
    inter_event_sequence,
    quantile_sketch,
)
from .similarity import (
    KSResult,
    MatchConfig,
    PairScore,
    composite_score,
    gof_indicator,
    ks_critical_value,
    ks_distance,
    match_all,
    sketch_lower_bound,
    top_k_candidates,
)

__version__ = "0.1.0"

__all__ = [
    "SECONDS_PER_DAY",
    "ActivityTimeline",
    "DayWindow",
    "DomainSnapshot",
    "GroundTruth",
    "ProfileId",
    "day_of",
    "InterEventCDF",
    "InterEventSequence",
    "QuantileSketch",
    "empirical_cdf",
    "fingerprint_of",
    "inter_event_sequence",
    "quantile_sketch",
    "KSResult",
    "MatchConfig",
    "PairScore",
    "composite_score",
    "gof_indicator",
    "ks_critical_value",
    "ks_distance",
    "match_all",
    "sketch_lower_bound",
    "top_k_candidates",
    "__version__",
]
