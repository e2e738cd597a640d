import math
from datetime import date, timedelta

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wavecast.errors import ConfigError, InsufficientDataError
from wavecast.features import FeatureSpec, aggregate_window, default_feature_spec
from wavecast.ingest import TimeSeries


def mkts(values, covariates=None):
    dates = [date(2021, 1, 1) + timedelta(days=i) for i in range(len(values))]
    return TimeSeries(dates, np.asarray(values, dtype=float), covariates or {})


def brute_force(agg, window):
    ordered = sorted(window)
    n = len(window)
    if agg == "mean":
        return sum(window) / n
    if agg == "min":
        return ordered[0]
    if agg == "max":
        return ordered[-1]
    if agg == "median":
        mid = n // 2
        return ordered[mid] if n % 2 else (ordered[mid - 1] + ordered[mid]) / 2
    if agg == "range":
        return ordered[-1] - ordered[0]
    if agg == "std":
        mu = sum(window) / n
        return math.sqrt(sum((v - mu) ** 2 for v in window) / n)
    raise AssertionError(agg)


def test_mean_over_window():
    spec = FeatureSpec((("cases", "mean"),), window=4)
    out = aggregate_window(mkts([1, 2, 3, 4]), 3, spec)
    assert out.tolist() == [2.5]


def test_constant_column_spread_is_zero():
    spec = FeatureSpec((("cases", "std"), ("cases", "range")), window=5)
    out = aggregate_window(mkts([7, 7, 7, 7, 7]), 4, spec)
    assert out.tolist() == [0.0, 0.0]


def test_median_and_range():
    spec = FeatureSpec((("cases", "median"), ("cases", "range")), window=5)
    out = aggregate_window(mkts([3, 1, 4, 1, 5]), 4, spec)
    assert out.tolist() == [3.0, 4.0]


def test_unknown_column_is_config_error():
    spec = FeatureSpec((("icu", "mean"),), window=2)
    with pytest.raises(ConfigError, match="icu"):
        aggregate_window(mkts([1, 2, 3]), 2, spec)


def test_window_before_stream_start():
    spec = FeatureSpec((("cases", "mean"),), window=4)
    with pytest.raises(InsufficientDataError):
        aggregate_window(mkts([1, 2, 3, 4]), 2, spec)


def test_covariate_lookup():
    ts = mkts([1, 2, 3], covariates={"icu": [10.0, 20.0, 60.0]})
    spec = FeatureSpec((("icu", "mean"), ("cases", "max")), window=2)
    out = aggregate_window(ts, 2, spec)
    assert out.tolist() == [40.0, 3.0]


def test_causality_ignores_later_days():
    spec = FeatureSpec((("cases", "mean"), ("cases", "std")), window=3)
    a = aggregate_window(mkts([1, 2, 3, 4, 5]), 2, spec)
    b = aggregate_window(mkts([1, 2, 3, 999, -5]), 2, spec)
    assert a.tolist() == b.tolist()


@given(
    st.lists(st.floats(min_value=-100, max_value=100, allow_nan=False), min_size=2, max_size=20),
    st.randoms(use_true_random=False),
)
def test_aggregators_are_permutation_neutral(values, rand):
    shuffled = list(values)
    rand.shuffle(shuffled)
    spec_items = tuple(("cases", a) for a in ("mean", "min", "max", "median", "range", "std"))
    spec = FeatureSpec(spec_items, window=len(values))
    direct = aggregate_window(mkts(values), len(values) - 1, spec)
    permuted = aggregate_window(mkts(shuffled), len(shuffled) - 1, spec)
    assert np.allclose(direct, permuted, rtol=1e-9, atol=1e-12)


def test_aggregators_match_brute_force_oracle():
    rng = np.random.default_rng(1234)
    base = rng.uniform(-5, 5, size=1100)
    ts = mkts(base)
    for _ in range(1000):
        window = int(rng.integers(2, 31))
        end = int(rng.integers(window - 1, len(base)))
        spec = FeatureSpec(
            tuple(("cases", a) for a in ("mean", "min", "max", "median", "range", "std")),
            window=window,
        )
        got = aggregate_window(ts, end, spec)
        chunk = base[end - window + 1 : end + 1].tolist()
        expected = [brute_force(a, chunk) for a in ("mean", "min", "max", "median", "range", "std")]
        for g, e in zip(got, expected):
            assert abs(g - e) <= 1e-12 * max(1.0, abs(g), abs(e))


def test_spec_validation():
    with pytest.raises(ConfigError):
        FeatureSpec((), window=14)
    with pytest.raises(ConfigError, match="aggregator"):
        FeatureSpec((("cases", "variance"),), window=14)
    with pytest.raises(ConfigError, match="std or range"):
        FeatureSpec((("cases", "std"),), window=1)


def test_default_spec_shape():
    spec = default_feature_spec()
    assert len(spec) == 20
    assert spec.window == 14
    assert spec.items[0] == ("school_closing", "mean")
    assert spec.items[2] == ("cases", "min")
    assert spec.items[3] == ("cases", "max")
