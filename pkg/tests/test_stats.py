import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ndtri

from rooftune.stats import (
    OnlineStats,
    UndefinedVarianceError,
    coefficient_of_variation,
    confidence_interval,
    normal_quantile,
    sample_variance,
    update,
)


def two_pass(xs):
    xs = [float(x) for x in xs]
    m = math.fsum(xs) / len(xs)
    c = math.fsum((x - m) ** 2 for x in xs)
    return m, c


def feed(xs):
    s = OnlineStats()
    for x in xs:
        s.update(x)
    return s


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def test_update_small_sequence():
    s = feed([1, 2, 3])
    assert (s.count, s.mean, s.corrected_sum) == (3, 2.0, 2.0)


def test_update_first_observation_has_zero_corrected_sum():
    s = feed([5])
    assert (s.count, s.mean, s.corrected_sum) == (1, 5.0, 0.0)


def test_empty_state_invariants():
    s = OnlineStats()
    assert (s.count, s.mean, s.corrected_sum) == (0, 0.0, 0.0)


def test_functional_update_leaves_input_untouched():
    s = feed([1.0])
    t = update(s, 3.0)
    assert s.count == 1 and t.count == 2 and t.mean == 2.0


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_update_rejects_non_finite(bad):
    with pytest.raises(ValueError):
        OnlineStats().update(bad)


def test_seeded_stream_matches_two_pass():
    xs = np.random.default_rng(1234).normal(50.0, 3.0, 1000)
    s = feed(xs)
    m, c = two_pass(xs)
    assert rel(s.mean, m) < 1e-12
    assert rel(s.corrected_sum, c) < 1e-12
    assert rel(s.sample_variance(), c / 999) < 1e-12
    assert rel(s.coefficient_of_variation(), math.sqrt(c / 999) / m) < 1e-12


def test_extend_matches_update_bitwise():
    xs = np.random.default_rng(7).lognormal(2.0, 0.5, 777)
    a = feed(xs)
    b = OnlineStats().extend(xs)
    assert (a.count, a.mean, a.corrected_sum) == (b.count, b.mean, b.corrected_sum)


def test_sample_variance_examples():
    assert sample_variance(feed([1, 2, 3])) == 1.0
    assert sample_variance(feed([7, 7, 7, 7])) == 0.0


@pytest.mark.parametrize("n", [0, 1])
def test_variance_needs_two_observations(n):
    s = feed([1.0] * n)
    with pytest.raises(UndefinedVarianceError):
        s.sample_variance()
    with pytest.raises(UndefinedVarianceError):
        s.confidence_interval(0.99)
    with pytest.raises(UndefinedVarianceError):
        s.coefficient_of_variation()


def test_confidence_interval_closed_form():
    # count=100, mean=100, sd=2: C = sd^2 * (n - 1)
    s = OnlineStats(100, 100.0, 4.0 * 99)
    ci = confidence_interval(s, 0.99)
    assert ci.half_width == pytest.approx(2.5758293 * 2 / 10, rel=1e-7)
    assert ci.half_width == pytest.approx(0.51517, abs=5e-6)
    assert ci.lower == ci.mean - ci.half_width and ci.upper == ci.mean + ci.half_width


def test_confidence_interval_examples():
    assert feed([5, 5, 5]).confidence_interval(0.95).half_width == 0.0
    assert feed([1, 2, 3]).confidence_interval(0.99).half_width == pytest.approx(2.5758293 * math.sqrt(1 / 3), rel=1e-8)
    assert feed([1, 2, 3]).confidence_interval(0.99).half_width == pytest.approx(1.48716, abs=5e-6)


def test_coefficient_of_variation_examples():
    assert coefficient_of_variation(feed([7, 7, 7])) == 0.0
    assert coefficient_of_variation(feed([1, 2, 3])) == 0.5
    with pytest.raises(ZeroDivisionError):
        feed([-1, 1]).coefficient_of_variation()


def test_normal_quantile_table_and_approximation():
    assert normal_quantile(0.99) == pytest.approx(2.5758293, abs=1e-7)
    assert normal_quantile(0.95) == pytest.approx(1.9599640, abs=1e-7)
    for level in (0.5, 0.8, 0.9, 0.95, 0.975, 0.99, 0.995, 0.999, 0.9999, 0.2, 0.01):
        assert abs(normal_quantile(level) - ndtri(0.5 + level / 2)) < 1e-9
    for level in np.linspace(0.001, 0.9999, 301):
        # off-table levels go through the rational approximation
        assert abs(normal_quantile(float(level)) - ndtri(0.5 + level / 2)) < 1e-9
    for bad in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            normal_quantile(bad)


finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)


@settings(max_examples=200, deadline=None)
@given(st.lists(finite, min_size=2, max_size=200))
def test_single_pass_equals_two_pass(xs):
    s = feed(xs)
    m, c = two_pass(xs)
    scale = max(abs(x) for x in xs) or 1.0
    assert abs(s.mean - m) <= 1e-12 * scale
    assert abs(s.corrected_sum - c) <= 1e-12 * max(c, scale * scale * len(xs) * 1e-3)
    assert s.corrected_sum >= 0.0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(min_value=-10, max_value=10, allow_nan=False), min_size=2, max_size=100)
       .filter(lambda v: max(v) - min(v) > 1e-3))
def test_shift_robustness(xs):
    base = feed(xs).sample_variance()
    shifted = feed([x + 1e9 for x in xs]).sample_variance()
    # the shift itself rounds each x to ~1e-7; compare against the exactly shifted data
    exact = np.var(np.array([x + 1e9 for x in xs]) - 1e9, ddof=1)
    assert rel(shifted, exact) < 1e-6
    assert rel(base, float(np.var(xs, ddof=1))) < 1e-9


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=0.1, max_value=100), st.integers(min_value=2, max_value=500))
def test_half_width_non_increasing_in_count(sd, n):
    def hw(count):
        return OnlineStats(count, 10.0, sd * sd * (count - 1)).confidence_interval(0.99).half_width

    assert hw(n + 1) <= hw(n)


def test_half_width_scales_with_quantile():
    s = feed(np.random.default_rng(3).normal(0, 1, 50))
    ratio = s.confidence_interval(0.99).half_width / s.confidence_interval(0.95).half_width
    assert ratio == pytest.approx(2.5758293 / 1.9599640, rel=1e-7)
