import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import cdf_of, make_timeline
from tfmatch.fingerprint import (
    DEFAULT_SKETCH_GRID,
    SKETCH_GRID_MAX_SECONDS,
    SKETCH_GRID_MIN_SECONDS,
    SKETCH_GRID_POINTS,
    empirical_cdf,
    fingerprint_of,
    inter_event_sequence,
    quantile_sketch,
)

times_arrays = st.lists(
    st.floats(min_value=0.0, max_value=86400.0, allow_nan=False),
    min_size=2,
    max_size=50,
).map(sorted)


def test_gaps_are_consecutive_differences():
    seq = inter_event_sequence(make_timeline("D0", "a", [10.0, 20.0, 35.0]))
    np.testing.assert_array_equal(seq.deltas, [10.0, 15.0])
    assert len(seq) == 2


def test_zero_gaps_are_kept():
    seq = inter_event_sequence(make_timeline("D0", "a", [5.0, 5.0, 7.0]))
    np.testing.assert_array_equal(seq.deltas, [0.0, 2.0])


def test_cdf_steps_at_sample_values():
    cdf = cdf_of([10.0, 20.0])
    assert cdf.evaluate(9.999) == 0.0
    assert cdf.evaluate(10.0) == 0.5
    assert cdf.evaluate(15.0) == 0.5
    assert cdf.evaluate(20.0) == 1.0
    assert cdf.evaluate(1e9) == 1.0
    assert cdf.n == 2


def test_cdf_handles_ties_as_double_steps():
    cdf = cdf_of([3.0, 3.0, 8.0, 8.0])
    assert cdf.evaluate(3.0) == 0.5
    assert cdf.evaluate(8.0) == 1.0


def test_cdf_vector_queries_match_scalar():
    cdf = cdf_of([1.0, 4.0, 9.0])
    queries = np.array([0.0, 1.0, 5.0, 9.0])
    vector = cdf.evaluate(queries)
    assert isinstance(vector, np.ndarray)
    for q, v in zip(queries, vector):
        assert v == cdf.evaluate(float(q))


@given(times_arrays)
def test_cdf_values_are_exact_count_fractions(times):
    cdf = fingerprint_of(make_timeline("D0", "a", times))
    values = cdf.evaluate(cdf.sorted_deltas)
    counts = values * cdf.n
    np.testing.assert_allclose(counts, np.round(counts), atol=1e-9)


@given(times_arrays, st.floats(min_value=-1e6, max_value=1e6, allow_nan=False))
def test_fingerprint_is_shift_invariant(times, shift):
    base = fingerprint_of(make_timeline("D0", "a", times))
    shifted = fingerprint_of(
        make_timeline("D0", "a", [t + shift for t in times], day=0)
    )
    np.testing.assert_allclose(shifted.sorted_deltas, base.sorted_deltas, atol=1e-9)


def test_default_grid_shape_and_range():
    assert DEFAULT_SKETCH_GRID.shape == (SKETCH_GRID_POINTS,)
    assert DEFAULT_SKETCH_GRID[0] == SKETCH_GRID_MIN_SECONDS
    assert DEFAULT_SKETCH_GRID[-1] == SKETCH_GRID_MAX_SECONDS
    assert np.all(np.diff(DEFAULT_SKETCH_GRID) > 0)
    # log-spaced: constant ratio between neighbours
    ratios = DEFAULT_SKETCH_GRID[1:] / DEFAULT_SKETCH_GRID[:-1]
    np.testing.assert_allclose(ratios, ratios[0])
    with pytest.raises(ValueError):
        DEFAULT_SKETCH_GRID[0] = 0.0


def test_sketch_samples_the_cdf_on_the_grid():
    cdf = cdf_of([2.0, 100.0, 5000.0])
    sketch = quantile_sketch(cdf)
    assert sketch.n == 3
    assert sketch.grid is DEFAULT_SKETCH_GRID
    np.testing.assert_array_equal(sketch.values, cdf.evaluate(DEFAULT_SKETCH_GRID))
    assert np.all(np.diff(sketch.values) >= 0)
    assert 0.0 <= sketch.values[0] <= sketch.values[-1] <= 1.0


def test_sketch_custom_grid_and_validation():
    cdf = cdf_of([5.0, 15.0])
    sketch = quantile_sketch(cdf, grid=np.array([1.0, 10.0, 20.0]))
    np.testing.assert_array_equal(sketch.values, [0.0, 0.5, 1.0])
    with pytest.raises(ValueError):
        quantile_sketch(cdf, grid=np.array([10.0, 1.0]))
    with pytest.raises(ValueError):
        quantile_sketch(cdf, grid=np.array([]))


def test_fingerprint_of_composes_the_two_steps():
    timeline = make_timeline("D0", "a", [0.0, 30.0, 40.0, 100.0])
    direct = fingerprint_of(timeline)
    staged = empirical_cdf(inter_event_sequence(timeline))
    np.testing.assert_array_equal(direct.sorted_deltas, staged.sorted_deltas)
    np.testing.assert_array_equal(direct.sorted_deltas, [10.0, 30.0, 60.0])


def test_unsorted_gaps_are_sorted_by_the_cdf():
    timeline = make_timeline("D0", "a", [0.0, 50.0, 55.0])  # gaps 50, 5
    cdf = fingerprint_of(timeline)
    np.testing.assert_array_equal(cdf.sorted_deltas, [5.0, 50.0])
