import math
from datetime import date, timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavecast.errors import ConfigError, DataError, InsufficientDataError, ParseError
from wavecast.ingest import (
    FIXED_GLOBAL_MAX,
    RUNNING_MAX,
    CsvSchema,
    TimeSeries,
    WaveSpec,
    filter_low_counts,
    generate_synthetic_stream,
    impute_missing,
    make_windows,
    normalize,
    parse_csv,
    write_csv,
)


def mkts(values, start=date(2021, 1, 1), covariates=None):
    dates = [start + timedelta(days=i) for i in range(len(values))]
    return TimeSeries(dates, np.asarray(values, dtype=float), covariates or {})


finite_values = st.lists(
    st.floats(min_value=0.0, max_value=1e6, allow_nan=False), min_size=1, max_size=60
)


# ---------------------------------------------------------------------------
# parse_csv
# ---------------------------------------------------------------------------

def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_parse_csv_three_rows(tmp_path):
    path = write(tmp_path, "date,cases\n2020-10-15,120\n2020-10-16,130\n2020-10-17,125\n")
    ts = parse_csv(path)
    assert len(ts) == 3
    assert ts.dates == [date(2020, 10, 15), date(2020, 10, 16), date(2020, 10, 17)]
    assert ts.values.tolist() == [120.0, 130.0, 125.0]


def test_parse_csv_sorts_out_of_order_rows(tmp_path):
    path = write(tmp_path, "date,cases\n2020-10-17,125\n2020-10-15,120\n2020-10-16,130\n")
    ts = parse_csv(path)
    assert ts.dates[0] == date(2020, 10, 15)
    assert ts.values.tolist() == [120.0, 130.0, 125.0]


def test_parse_csv_bad_date_names_line(tmp_path):
    path = write(tmp_path, "date,cases\n15/10/20,120\n15/13/20,130\n", name="dmy.csv")
    with pytest.raises(ParseError, match="line 3"):
        parse_csv(path, CsvSchema(date_format="DD/MM/YY"))


def test_parse_csv_bad_number_names_line(tmp_path):
    path = write(tmp_path, "date,cases\n2020-10-15,abc\n")
    with pytest.raises(ParseError, match="line 2"):
        parse_csv(path)


def test_parse_csv_duplicate_date(tmp_path):
    path = write(tmp_path, "date,cases\n2020-10-15,120\n2020-10-15,130\n")
    with pytest.raises(DataError, match="duplicate"):
        parse_csv(path)


def test_parse_csv_negative_count(tmp_path):
    path = write(tmp_path, "date,cases\n2020-10-15,-5\n")
    with pytest.raises(DataError, match="negative"):
        parse_csv(path)


def test_parse_csv_empty_cells_are_missing(tmp_path):
    path = write(tmp_path, "date,cases,a\n2020-10-15,,3\n2020-10-16,130,\n")
    ts = parse_csv(path)
    assert math.isnan(ts.values[0])
    assert ts.covariates["a"][0] == 3.0
    assert math.isnan(ts.covariates["a"][1])


def test_parse_csv_missing_column(tmp_path):
    path = write(tmp_path, "day,cases\n2020-10-15,120\n")
    with pytest.raises(DataError, match="'date'"):
        parse_csv(path)


def test_parse_csv_explicit_covariates(tmp_path):
    path = write(tmp_path, "date,cases,a,b\n2020-10-15,120,1,2\n")
    ts = parse_csv(path, CsvSchema(covariate_columns=("b",)))
    assert list(ts.covariates) == ["b"]


def test_parse_csv_dmy_format(tmp_path):
    path = write(tmp_path, "date,cases\n15/10/20,120\n")
    ts = parse_csv(path, CsvSchema(date_format="DD/MM/YY"))
    assert ts.dates == [date(2020, 10, 15)]


# ---------------------------------------------------------------------------
# impute_missing
# ---------------------------------------------------------------------------

def test_impute_case_from_covariate_row_mean():
    ts = mkts([math.nan], covariates={"a": [10.0], "b": [20.0]})
    out = impute_missing(ts)
    assert out.values[0] == 15.0


def test_impute_fully_missing_day_copies_previous():
    ts = mkts([130.0, math.nan])
    out = impute_missing(ts)
    assert out.values.tolist() == [130.0, 130.0]


def test_impute_identity_when_nothing_missing():
    ts = mkts([120.0, 130.0], covariates={"a": [1.0, 2.0]})
    out = impute_missing(ts)
    assert out.values.tolist() == ts.values.tolist()
    assert out.covariates["a"].tolist() == [1.0, 2.0]


def test_impute_first_day_fully_missing_is_error():
    with pytest.raises(DataError, match="first day"):
        impute_missing(mkts([math.nan, 130.0]))


def test_impute_fills_calendar_gaps():
    ts = TimeSeries([date(2021, 1, 1), date(2021, 1, 4)], np.array([100.0, 400.0]))
    out = impute_missing(ts)
    assert len(out) == 4
    assert out.values.tolist() == [100.0, 100.0, 100.0, 400.0]
    assert out.dates[1] == date(2021, 1, 2)


def test_impute_covariate_cell_from_row():
    ts = mkts([120.0], covariates={"a": [math.nan], "b": [60.0]})
    out = impute_missing(ts)
    assert out.covariates["a"][0] == 90.0  # mean of cases 120 and b 60


# ---------------------------------------------------------------------------
# filter_low_counts
# ---------------------------------------------------------------------------

def test_filter_drops_low_days():
    out = filter_low_counts(mkts([120.0, 90.0, 130.0]))
    assert out.values.tolist() == [120.0, 130.0]
    assert out.dates == [date(2021, 1, 1), date(2021, 1, 3)]


def test_filter_identity_when_all_high():
    out = filter_low_counts(mkts([120.0, 130.0]))
    assert out.values.tolist() == [120.0, 130.0]


def test_filter_all_below_threshold_is_error():
    with pytest.raises(DataError):
        filter_low_counts(mkts([10.0, 20.0]))


@given(finite_values)
def test_filter_idempotent(values):
    ts = mkts(values)
    try:
        once = filter_low_counts(ts)
    except DataError:
        return
    twice = filter_low_counts(once)
    assert twice.values.tolist() == once.values.tolist()
    assert twice.dates == once.dates


# ---------------------------------------------------------------------------
# normalize
# ---------------------------------------------------------------------------

def test_normalize_fixed_global_max():
    scaled, scale = normalize(mkts([200.0, 400.0, 100.0]), FIXED_GLOBAL_MAX)
    assert scaled.values.tolist() == [0.5, 1.0, 0.25]
    assert scale.factor_at(0) == 400.0


def test_normalize_running_max():
    scaled, scale = normalize(mkts([200.0, 400.0, 100.0]), RUNNING_MAX)
    assert scaled.values.tolist() == [1.0, 1.0, 0.25]
    assert scale.factors.tolist() == [200.0, 400.0, 400.0]


def test_normalize_constant_series():
    scaled, _ = normalize(mkts([7.0, 7.0, 7.0]), RUNNING_MAX)
    assert scaled.values.tolist() == [1.0, 1.0, 1.0]


def test_normalize_rejects_non_positive_max():
    with pytest.raises(DataError):
        normalize(mkts([0.0, 0.0]))


def test_normalize_rejects_missing():
    with pytest.raises(DataError, match="impute"):
        normalize(mkts([1.0, math.nan]))


@pytest.mark.parametrize("mode", [RUNNING_MAX, FIXED_GLOBAL_MAX])
@given(values=finite_values)
@settings(max_examples=50)
def test_normalize_round_trip(mode, values):
    ts = mkts(values)
    if ts.values.max() <= 0:
        return
    scaled, scale = normalize(ts, mode)
    back = scale.denormalize_series(scaled.values)
    assert np.allclose(back, ts.values, rtol=1e-12, atol=0.0)


def test_running_max_scale_is_causal_and_non_decreasing():
    values = [300.0, 200.0, 500.0, 100.0, 900.0]
    _, scale = normalize(mkts(values), RUNNING_MAX)
    mutated = list(values)
    mutated[3:] = [9999.0, 1.0]
    _, scale2 = normalize(mkts(mutated), RUNNING_MAX)
    assert scale.factors[:3].tolist() == scale2.factors[:3].tolist()
    assert all(a <= b for a, b in zip(scale.factors, scale.factors[1:]))


def test_normalize_scales_covariates_per_column():
    ts = mkts([100.0, 200.0], covariates={"a": [5.0, 10.0]})
    scaled, _ = normalize(ts, FIXED_GLOBAL_MAX)
    assert scaled.covariates["a"].tolist() == [0.5, 1.0]


# ---------------------------------------------------------------------------
# make_windows
# ---------------------------------------------------------------------------

def test_make_windows_enumeration():
    ts = mkts(list(range(1, 11)))
    examples = make_windows(ts, 3, 1)
    assert len(examples) == 7
    assert examples[0].x.tolist() == [1.0, 2.0, 3.0]
    assert examples[0].y.tolist() == [4.0]


def test_make_windows_single_example():
    examples = make_windows(mkts(list(range(1, 11))), 7, 3)
    assert len(examples) == 1
    assert examples[0].x.tolist() == [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]
    assert examples[0].y.tolist() == [8.0, 9.0, 10.0]


def test_make_windows_insufficient_data():
    with pytest.raises(InsufficientDataError):
        make_windows(mkts(list(range(9))), 7, 3)


def test_make_windows_dates_line_up():
    examples = make_windows(mkts([1, 2, 3, 4, 5]), 2, 2)
    ex = examples[0]
    assert ex.target_dates[0] == ex.issue_date + timedelta(days=1)
    assert len(ex.target_dates) == 2


@given(
    n=st.integers(min_value=2, max_value=50),
    window=st.integers(min_value=1, max_value=10),
    horizon=st.integers(min_value=1, max_value=10),
)
def test_make_windows_count_law_and_overlap(n, window, horizon):
    ts = mkts(list(range(n)))
    if n < window + horizon:
        with pytest.raises(InsufficientDataError):
            make_windows(ts, window, horizon)
        return
    examples = make_windows(ts, window, horizon)
    assert len(examples) == n - window - horizon + 1
    for a, b in zip(examples, examples[1:]):
        assert a.x[1:].tolist() == b.x[:-1].tolist()  # W-1 shared entries


# ---------------------------------------------------------------------------
# synthetic streams
# ---------------------------------------------------------------------------

def test_synthetic_noiseless_peak_is_exact():
    ts = generate_synthetic_stream((WaveSpec(0, 50, 100, 1000.0),), noise=0.0, seed=1)
    assert len(ts) == 101
    assert ts.values[50] == 1000.0


def test_synthetic_same_seed_identical():
    waves = (WaveSpec(0, 50, 100, 1000.0),)
    a = generate_synthetic_stream(waves, noise=0.05, seed=3)
    b = generate_synthetic_stream(waves, noise=0.05, seed=3)
    assert a.values.tolist() == b.values.tolist()
    assert a.dates == b.dates


def test_synthetic_seeds_differ_but_share_envelope():
    waves = (WaveSpec(0, 50, 100, 1000.0),)
    envelope = generate_synthetic_stream(waves, noise=0.0, seed=0).values
    a = generate_synthetic_stream(waves, noise=0.05, seed=1).values
    b = generate_synthetic_stream(waves, noise=0.05, seed=2).values
    assert not np.array_equal(a, b)
    for stream in (a, b):
        within = np.abs(stream - envelope) <= 3 * 0.05 * envelope
        assert within.mean() >= 0.98
        assert np.all(np.abs(stream - envelope) <= 5 * 0.05 * envelope)


def test_synthetic_overlapping_waves_rejected():
    with pytest.raises(ConfigError, match="overlap"):
        generate_synthetic_stream(
            (WaveSpec(0, 50, 100, 1000.0), WaveSpec(80, 120, 160, 500.0)), seed=0
        )


def test_synthetic_clipped_at_floor():
    ts = generate_synthetic_stream((WaveSpec(0, 5, 10, 500.0),), noise=0.8, seed=9, baseline=110.0)
    assert ts.values.min() >= 100.0


def test_synthetic_bad_wave_rejected():
    with pytest.raises(ConfigError):
        generate_synthetic_stream((WaveSpec(10, 5, 20, 500.0),), seed=0)


def test_write_csv_round_trip(tmp_path):
    ts = generate_synthetic_stream((WaveSpec(0, 5, 10, 500.0),), noise=0.1, seed=4)
    path = tmp_path / "synth.csv"
    write_csv(ts, path)
    back = parse_csv(path)
    assert back.dates == ts.dates
    assert np.allclose(back.values, ts.values, rtol=1e-9)
