import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from helpers import cdf_of, make_snapshots
from tfmatch.fingerprint import DEFAULT_SKETCH_GRID, quantile_sketch
from tfmatch.model import ProfileId
from tfmatch.similarity import (
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

gap_samples = st.lists(
    st.floats(min_value=0.0, max_value=1e5, allow_nan=False),
    min_size=1,
    max_size=120,
)


# --- exact statistic ---------------------------------------------------------


def test_ks_pinned_example():
    assert ks_distance(cdf_of([1.0, 2.0]), cdf_of([1.0, 3.0])).statistic == 0.5


def test_ks_identical_samples_is_zero():
    cdf = cdf_of([3.0, 7.0, 7.0, 40.0])
    assert ks_distance(cdf, cdf).statistic == 0.0


def test_ks_disjoint_samples_is_one():
    assert ks_distance(cdf_of([1.0, 2.0]), cdf_of([10.0, 20.0])).statistic == 1.0


def test_ks_result_records_sample_sizes():
    result = ks_distance(cdf_of([1.0, 2.0, 3.0]), cdf_of([1.5, 2.5]))
    assert (result.m, result.k) == (3, 2)
    assert 0.0 <= result.p_value <= 1.0


def test_ks_p_value_decreases_with_separation():
    base = np.linspace(1, 100, 50)
    near = ks_distance(cdf_of(base), cdf_of(base * 1.05))
    far = ks_distance(cdf_of(base), cdf_of(base * 3.0))
    assert far.statistic > near.statistic
    assert far.p_value < near.p_value


@given(gap_samples, gap_samples)
@settings(max_examples=200)
def test_ks_matches_brute_force_reference(sample_a, sample_b):
    engine = ks_distance(cdf_of(sample_a), cdf_of(sample_b)).statistic
    reference = oracles.ks_statistic_reference(sample_a, sample_b)
    assert abs(engine - reference) <= 1e-12


@given(gap_samples, gap_samples)
def test_ks_is_symmetric(sample_a, sample_b):
    a, b = cdf_of(sample_a), cdf_of(sample_b)
    assert ks_distance(a, b).statistic == ks_distance(b, a).statistic


@given(gap_samples)
def test_ks_bounds(sample):
    other = cdf_of([v + 0.5 for v in sample])
    stat = ks_distance(cdf_of(sample), other).statistic
    assert 0.0 <= stat <= 1.0


def test_ks_rejects_empty_side():
    with pytest.raises(ValueError):
        ks_distance(cdf_of([]), cdf_of([1.0]))


# --- critical value and gate -------------------------------------------------


def test_critical_value_pinned():
    assert ks_critical_value(0.05, 100, 100) == pytest.approx(0.19207, abs=1e-5)


@pytest.mark.parametrize("m,k", [(1, 1), (3, 5), (7, 1000), (100, 250), (123, 456)])
def test_critical_value_symmetry_is_exact(m, k):
    assert ks_critical_value(0.05, m, k) == ks_critical_value(0.05, k, m)


@given(
    st.floats(min_value=0.001, max_value=0.999),
    st.integers(min_value=1, max_value=100000),
    st.integers(min_value=1, max_value=100000),
)
def test_critical_value_matches_reference_form(alpha, m, k):
    value = ks_critical_value(alpha, m, k)
    assert value == pytest.approx(oracles.critical_value_reference(alpha, m, k), rel=1e-12)


def test_critical_value_shrinks_with_samples_and_alpha():
    assert ks_critical_value(0.05, 1000, 1000) < ks_critical_value(0.05, 10, 10)
    assert ks_critical_value(0.2, 100, 100) < ks_critical_value(0.05, 100, 100)


def test_critical_value_rejects_bad_arguments():
    with pytest.raises(ValueError):
        ks_critical_value(0.0, 10, 10)
    with pytest.raises(ValueError):
        ks_critical_value(1.0, 10, 10)
    with pytest.raises(ValueError):
        ks_critical_value(0.05, 0, 10)


def test_gate_is_inclusive_at_the_threshold():
    threshold = ks_critical_value(0.05, 200, 300)
    assert gof_indicator(threshold, 0.05, 200, 300)
    assert not gof_indicator(threshold + 1e-9, 0.05, 200, 300)
    assert gof_indicator(0.0, 0.05, 200, 300)


# --- composite ---------------------------------------------------------------


def test_composite_offsets_rejected_pairs():
    assert composite_score(0.3, True) == 0.3
    assert composite_score(0.3, False) == 1.3
    assert composite_score(0.0, True) == 0.0


@given(
    st.floats(min_value=0.0, max_value=0.999999),
    st.floats(min_value=0.0, max_value=1.0),
)
def test_every_accepted_pair_outranks_every_rejected_pair(ks_accepted, ks_rejected):
    assert composite_score(ks_accepted, True) < composite_score(ks_rejected, False)


@given(
    st.floats(min_value=0.0, max_value=1.0),
    st.floats(min_value=0.0, max_value=1.0),
    st.booleans(),
)
def test_composite_preserves_ks_order_within_a_block(x, y, gof):
    low, high = sorted((x, y))
    assert composite_score(low, gof) <= composite_score(high, gof)


# --- sketch bound ------------------------------------------------------------


@given(gap_samples, gap_samples)
@settings(max_examples=200)
def test_sketch_bound_never_exceeds_exact_ks(sample_a, sample_b):
    a, b = cdf_of(sample_a), cdf_of(sample_b)
    bound = sketch_lower_bound(quantile_sketch(a), quantile_sketch(b))
    assert bound <= ks_distance(a, b).statistic


def test_sketch_bound_tight_when_samples_sit_on_the_grid():
    a = cdf_of([DEFAULT_SKETCH_GRID[5]] * 3)
    b = cdf_of([DEFAULT_SKETCH_GRID[20]] * 3)
    bound = sketch_lower_bound(quantile_sketch(a), quantile_sketch(b))
    assert bound == ks_distance(a, b).statistic == 1.0


def test_sketch_bound_rejects_mismatched_grids():
    cdf = cdf_of([1.0, 2.0])
    s1 = quantile_sketch(cdf, grid=np.array([1.0, 2.0]))
    s2 = quantile_sketch(cdf, grid=np.array([1.0, 3.0]))
    with pytest.raises(ValueError):
        sketch_lower_bound(s1, s2)


# --- matching engine ---------------------------------------------------------


def two_domain_population():
    return make_snapshots(
        {
            "D0": {
                "a": np.cumsum([0.0, 10.0, 10.0, 10.0, 10.0]),
                "b": np.cumsum([5.0, 200.0, 300.0, 250.0, 220.0]),
            },
            "D1": {
                "c": np.cumsum([2.0, 10.0, 10.0, 10.0, 10.0]),
                "d": np.cumsum([7.0, 1000.0, 2000.0, 1500.0, 1200.0]),
            },
        }
    )


def test_match_all_scores_every_cross_domain_pair():
    ranked = match_all(two_domain_population())
    assert len(ranked) == 4
    assert all(s.left.domain_id == "D0" and s.right.domain_id == "D1" for s in ranked)
    composites = [s.composite for s in ranked]
    assert composites == sorted(composites)
    # identical gap structure ranks first
    assert (ranked[0].left.local_id, ranked[0].right.local_id) == ("a", "c")
    assert ranked[0].ks == 0.0
    assert ranked[0].composite == 0.0
    assert ranked[0].gof


def test_match_all_three_domains_counts():
    snapshots = make_snapshots(
        {
            "D0": {"a": [0.0, 10.0, 25.0]},
            "D1": {"b": [1.0, 11.0, 26.0], "c": [2.0, 30.0, 31.0]},
            "D2": {"d": [3.0, 13.0, 28.0]},
        }
    )
    ranked = match_all(snapshots)
    # |D0 x D1| + |D0 x D2| + |D1 x D2| = 2 + 1 + 2
    assert len(ranked) == 5
    assert all(s.left.domain_id < s.right.domain_id for s in ranked)


def test_match_all_requires_two_domains():
    snapshots = make_snapshots({"D0": {"a": [0.0, 1.0, 2.0]}})
    with pytest.raises(ValueError):
        match_all(snapshots)


def test_match_all_worker_count_does_not_change_results():
    snapshots = two_domain_population()
    serial = match_all(snapshots, MatchConfig(workers=1))
    parallel = match_all(snapshots, MatchConfig(workers=2))
    assert serial == parallel


def test_match_all_pruning_returns_identical_survivors():
    # Two behavioural clusters per domain: same-cluster pairs land well
    # below the threshold, cross-cluster pairs well above it, so the
    # prune path provably skips some pairs and keeps others.
    rng = np.random.default_rng(5)
    population = {}
    for domain in ("D0", "D1"):
        timelines = {}
        for i in range(6):
            timelines[f"fast{i}"] = np.sort(rng.uniform(0, 4000, size=30))
            timelines[f"slow{i}"] = np.sort(rng.uniform(0, 80000, size=30))
        population[domain] = timelines
    snapshots = make_snapshots(population)
    threshold = 0.4
    exhaustive = match_all(snapshots)
    pruned = match_all(snapshots, MatchConfig(prune_threshold=threshold))
    keep = [s for s in exhaustive if s.ks <= threshold]
    kept = [s for s in pruned if s.ks <= threshold]
    assert keep == kept
    assert keep  # non-vacuous: some pairs survive
    assert len(pruned) < len(exhaustive)  # pruning actually skipped work


def test_match_all_flags_degenerate_acceptances():
    # Two-gap samples with disjoint supports: KS = 1 yet the tiny-sample
    # threshold exceeds 1, which the engine treats as a config error.
    snapshots = make_snapshots(
        {
            "D0": {"a": [0.0, 1.0, 2.0]},
            "D1": {"b": [0.0, 100.0, 200.0]},
        }
    )
    with pytest.raises(AssertionError):
        match_all(snapshots)


def test_match_config_validation():
    with pytest.raises(ValueError):
        MatchConfig(alpha=0.0)
    with pytest.raises(ValueError):
        MatchConfig(workers=0)
    with pytest.raises(ValueError):
        MatchConfig(prune_threshold=-0.1)


def test_top_k_candidates_sees_pairs_from_both_sides():
    p = lambda d, l: ProfileId(d, l)
    scores = [
        PairScore(p("D0", "a"), p("D1", "x"), 0.1, 0.9, True, 0.1, 9, 9),
        PairScore(p("D0", "a"), p("D1", "y"), 0.2, 0.8, True, 0.2, 9, 9),
        PairScore(p("D0", "b"), p("D1", "x"), 0.3, 0.7, True, 0.3, 9, 9),
    ]
    top1 = top_k_candidates(scores, 1)
    assert top1[p("D0", "a")] == [p("D1", "x")]
    assert top1[p("D1", "x")] == [p("D0", "a")]
    assert top1[p("D1", "y")] == [p("D0", "a")]
    top2 = top_k_candidates(scores, 2)
    assert top2[p("D0", "a")] == [p("D1", "x"), p("D1", "y")]
    assert top2[p("D1", "x")] == [p("D0", "a"), p("D0", "b")]
    with pytest.raises(ValueError):
        top_k_candidates(scores, 0)
