"""Ingestion and preprocessing of daily case-count streams.

Covers the path from a raw CSV file (or a synthetic generator) to model-ready
data: parsing with a user-mapped column schema, missing-value imputation,
low-count filtering, max-normalization, and sliding-window example
construction. All operations are pure; each returns a new object.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta

import numpy as np

from .errors import ConfigError, DataError, InsufficientDataError, ParseError

DATE_FORMATS = {
    "YYYY-MM-DD": "%Y-%m-%d",
    "DD/MM/YY": "%d/%m/%y",
}

RUNNING_MAX = "running-max"
FIXED_GLOBAL_MAX = "fixed-global-max"
NORMALIZATION_MODES = (RUNNING_MAX, FIXED_GLOBAL_MAX)

LOW_COUNT_THRESHOLD = 100.0


@dataclass
class TimeSeries:
    """Daily case counts plus optional named covariate columns.

    ``values`` uses NaN as the missing marker until :func:`impute_missing`
    runs. Dates are strictly increasing but not necessarily gap-free:
    low-count filtering removes days while keeping the original dates for
    segment labeling; downstream windows run over stream position.
    """

    dates: list[date]
    values: np.ndarray
    covariates: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise DataError("values must be one-dimensional")
        if len(self.dates) != self.values.size:
            raise DataError(
                f"{len(self.dates)} dates vs {self.values.size} values"
            )
        for prev, cur in zip(self.dates, self.dates[1:]):
            if cur <= prev:
                raise DataError(f"dates not strictly increasing at {cur}")
        self.covariates = {
            name: np.asarray(col, dtype=float)
            for name, col in self.covariates.items()
        }
        for name, col in self.covariates.items():
            if col.shape != self.values.shape:
                raise DataError(
                    f"covariate {name!r} has {col.size} values, expected {self.values.size}"
                )

    def __len__(self) -> int:
        return self.values.size

    def slice(self, start: int, stop: int) -> "TimeSeries":
        """Copy of the sub-series over stream positions [start, stop)."""
        return TimeSeries(
            self.dates[start:stop],
            self.values[start:stop].copy(),
            {k: v[start:stop].copy() for k, v in self.covariates.items()},
        )


@dataclass(frozen=True)
class CsvSchema:
    """Maps CSV headers onto the stream; empty cells mark missing values."""

    date_column: str = "date"
    case_column: str = "cases"
    date_format: str = "YYYY-MM-DD"
    covariate_columns: tuple[str, ...] | None = None  # None: every other column


def _parse_cell(raw: str | None, path, line: int, column: str) -> float:
    text = (raw or "").strip()
    if not text:
        return math.nan
    try:
        return float(text)
    except ValueError:
        raise ParseError(
            f"{path}: line {line}: column {column!r}: not a number: {text!r}"
        ) from None


def parse_csv(path, schema: CsvSchema = CsvSchema()) -> TimeSeries:
    """Read a daily-cases CSV into a TimeSeries, sorted by date.

    Empty cells become NaN markers for :func:`impute_missing`. Unparseable
    dates or numbers raise :class:`ParseError` naming the file line;
    duplicate dates and negative case counts raise :class:`DataError`.
    """
    fmt = DATE_FORMATS.get(schema.date_format)
    if fmt is None:
        raise ConfigError(
            f"date_format must be one of {sorted(DATE_FORMATS)}, got {schema.date_format!r}"
        )
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in (schema.date_column, schema.case_column):
            if col not in header:
                raise DataError(f"{path}: column {col!r} not found in header {header}")
        if schema.covariate_columns is None:
            cov_names = [
                c for c in header if c not in (schema.date_column, schema.case_column)
            ]
        else:
            cov_names = list(schema.covariate_columns)
            missing = [c for c in cov_names if c not in header]
            if missing:
                raise DataError(f"{path}: covariate columns {missing} not in header")
        rows = []
        for rec in reader:
            line = reader.line_num
            raw_date = (rec.get(schema.date_column) or "").strip()
            try:
                day = datetime.strptime(raw_date, fmt).date()
            except ValueError:
                raise ParseError(
                    f"{path}: line {line}: unparseable date {raw_date!r}"
                ) from None
            value = _parse_cell(rec.get(schema.case_column), path, line, schema.case_column)
            if value < 0:  # NaN compares false
                raise DataError(f"{path}: line {line}: negative case count {value:g}")
            covs = [_parse_cell(rec.get(c), path, line, c) for c in cov_names]
            rows.append((day, value, covs))
    if not rows:
        raise DataError(f"{path}: no data rows")
    rows.sort(key=lambda r: r[0])
    for (d1, *_), (d2, *_) in zip(rows, rows[1:]):
        if d1 == d2:
            raise DataError(f"{path}: duplicate date {d1}")
    covariates = {
        name: np.array([r[2][k] for r in rows]) for k, name in enumerate(cov_names)
    }
    return TimeSeries([r[0] for r in rows], np.array([r[1] for r in rows]), covariates)


def impute_missing(ts: TimeSeries) -> TimeSeries:
    """Fill missing cells and calendar gaps; the result is gap-free.

    A missing cell takes the mean of the other numeric cells available on
    the same day; a fully missing day (including a date absent from the
    input) repeats the previous day. A fully missing first day has no
    previous day and is a data error.
    """
    if len(ts) == 0:
        raise DataError("empty series")
    names = list(ts.covariates)
    n_days = (ts.dates[-1] - ts.dates[0]).days + 1
    grid = np.full((n_days, 1 + len(names)), np.nan)
    for i, day in enumerate(ts.dates):
        row = (day - ts.dates[0]).days
        grid[row, 0] = ts.values[i]
        for j, name in enumerate(names):
            grid[row, 1 + j] = ts.covariates[name][i]
    for r in range(n_days):
        have = np.isfinite(grid[r])
        if not have.any():
            if r == 0:
                raise DataError("first day fully missing; no previous day to repeat")
            grid[r] = grid[r - 1]
        elif not have.all():
            grid[r, ~have] = grid[r, have].mean()
    all_dates = [ts.dates[0] + timedelta(days=i) for i in range(n_days)]
    return TimeSeries(
        all_dates,
        grid[:, 0].copy(),
        {name: grid[:, 1 + j].copy() for j, name in enumerate(names)},
    )


def filter_low_counts(ts: TimeSeries, threshold: float = LOW_COUNT_THRESHOLD) -> TimeSeries:
    """Drop days with fewer cases than the threshold.

    The retained days form one contiguous stream; original dates are kept
    so evaluation can still label wave segments.
    """
    keep = ts.values >= threshold
    if not keep.any():
        raise DataError(f"no days with at least {threshold:g} cases remain")
    return TimeSeries(
        [d for d, k in zip(ts.dates, keep) if k],
        ts.values[keep].copy(),
        {name: col[keep].copy() for name, col in ts.covariates.items()},
    )


@dataclass(frozen=True)
class Scale:
    """Per-day divisors for the case column; inverts the normalization.

    Under running-max mode the factor at day t uses only values at days
    <= t, so denormalizing a forecast issued at day t is causal.
    """

    mode: str
    factors: np.ndarray

    def factor_at(self, day: int) -> float:
        return float(self.factors[day])

    def denormalize(self, values, issue_day: int) -> np.ndarray:
        """Rescale a forecast issued at stream position ``issue_day``."""
        return np.asarray(values, dtype=float) * self.factors[issue_day]

    def denormalize_series(self, values) -> np.ndarray:
        """Invert the normalization day by day (element i uses factor i)."""
        return np.asarray(values, dtype=float) * self.factors


def _column_factors(col: np.ndarray, mode: str) -> np.ndarray:
    magnitude = np.abs(col)
    if mode == FIXED_GLOBAL_MAX:
        peak = magnitude.max()
        return np.full(col.size, peak if peak > 0 else 1.0)
    acc = np.maximum.accumulate(magnitude)
    positive = acc > 0
    if positive.any():
        first = int(np.argmax(positive))
        acc[:first] = acc[first]  # keep factors positive and non-decreasing
    else:
        acc[:] = 1.0
    return acc


def normalize(ts: TimeSeries, mode: str = RUNNING_MAX) -> tuple[TimeSeries, Scale]:
    """Divide by the maximum case count; returns the stream and its Scale.

    fixed-global-max divides every day by the whole-stream maximum (simple,
    but the divisor is only known in hindsight); running-max divides day t
    by the maximum over days <= t, which keeps the pipeline causal.
    Covariate columns are scaled per-column under the same mode.
    """
    if mode not in NORMALIZATION_MODES:
        raise ConfigError(f"normalization mode must be one of {NORMALIZATION_MODES}, got {mode!r}")
    if len(ts) == 0:
        raise DataError("empty series")
    if not np.isfinite(ts.values).all():
        raise DataError("series has missing values; impute before normalizing")
    if ts.values.max() <= 0:
        raise DataError("maximum case count must be positive")
    factors = _column_factors(ts.values, mode)
    covariates = {
        name: col / _column_factors(col, mode) for name, col in ts.covariates.items()
    }
    scaled = TimeSeries(list(ts.dates), ts.values / factors, covariates)
    return scaled, Scale(mode, factors)


@dataclass
class WindowedExample:
    """One supervised pair: W-day lookback vector x, D-day target vector y.

    x is ordered oldest to newest; the targets start on the stream day
    right after ``issue_date``.
    """

    x: np.ndarray
    y: np.ndarray
    issue_date: date
    target_dates: list[date]


def make_windows(ts: TimeSeries, window: int, horizon: int) -> list[WindowedExample]:
    """All sliding-window examples; exactly len(ts) - window - horizon + 1."""
    if window < 1 or horizon < 1:
        raise ConfigError("window and horizon must be >= 1")
    total = len(ts) - window - horizon + 1
    if total < 1:
        raise InsufficientDataError(
            f"need at least {window + horizon} days for window {window} "
            f"and horizon {horizon}, have {len(ts)}"
        )
    out = []
    for i in range(total):
        out.append(
            WindowedExample(
                x=ts.values[i : i + window].copy(),
                y=ts.values[i + window : i + window + horizon].copy(),
                issue_date=ts.dates[i + window - 1],
                target_dates=list(ts.dates[i + window : i + window + horizon]),
            )
        )
    return out


@dataclass(frozen=True)
class WaveSpec:
    """One synthetic outbreak: exponential rise to the peak, then decay.

    Day indices are inclusive stream positions; ``height`` is the peak
    daily case count.
    """

    start: int
    peak: int
    end: int
    height: float


DEFAULT_START_DATE = date(2020, 10, 15)
DEFAULT_STREAM_DAYS = 724
# Five-wave envelope spanning the default 724-day calendar; each peak falls
# inside the matching default evaluation wave window.
DEFAULT_WAVES = (
    WaveSpec(30, 74, 130, 900.0),
    WaveSpec(150, 185, 225, 950.0),
    WaveSpec(240, 275, 320, 1200.0),
    WaveSpec(395, 440, 500, 5500.0),
    WaveSpec(565, 630, 690, 3200.0),
)
CLIP_FLOOR = 100.0


def _envelope(waves, n_days: int, baseline: float) -> np.ndarray:
    env = np.full(n_days, float(baseline))
    for w in waves:
        for d in range(w.start, min(w.end, n_days - 1) + 1):
            if d == w.peak:
                env[d] = w.height
            elif d < w.peak:
                env[d] = baseline * (w.height / baseline) ** ((d - w.start) / (w.peak - w.start))
            else:
                env[d] = w.height * (baseline / w.height) ** ((d - w.peak) / (w.end - w.peak))
    return env


def generate_synthetic_stream(
    waves=DEFAULT_WAVES,
    noise: float = 0.05,
    seed: int = 0,
    n_days: int | None = None,
    start_date: date = DEFAULT_START_DATE,
    baseline: float = 120.0,
) -> TimeSeries:
    """Deterministic nonstationary test stream.

    Piecewise-exponential waves over a flat baseline, multiplied by
    (1 + noise * N(0, 1)) per day and clipped at 100 so the low-count
    filter is a no-op. Pure function of (waves, noise, seed, span).
    """
    if baseline <= 0:
        raise ConfigError("baseline must be positive")
    if noise < 0:
        raise ConfigError("noise must be non-negative")
    waves = tuple(waves)
    for w in waves:
        if not 0 <= w.start <= w.peak <= w.end:
            raise ConfigError(f"wave days must satisfy 0 <= start <= peak <= end: {w}")
        if w.height <= 0:
            raise ConfigError(f"wave height must be positive: {w}")
    ordered = sorted(waves, key=lambda w: w.start)
    for a, b in zip(ordered, ordered[1:]):
        if b.start <= a.end:
            raise ConfigError(f"waves overlap: days {b.start}..{a.end}")
    if n_days is None:
        n_days = max((w.end for w in waves), default=0) + 1
    if n_days < 1:
        raise ConfigError("n_days must be >= 1")
    env = _envelope(ordered, n_days, baseline)
    rng = np.random.default_rng(seed)
    values = env * (1.0 + noise * rng.standard_normal(n_days))
    values = np.maximum(values, CLIP_FLOOR)
    dates = [start_date + timedelta(days=i) for i in range(n_days)]
    return TimeSeries(dates, values)


def _format_value(v: float) -> str:
    return "" if not np.isfinite(v) else format(float(v), ".10g")


def write_csv(ts: TimeSeries, path) -> None:
    """Emit the stream in the ingestion CSV format (ISO dates)."""
    names = list(ts.covariates)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "cases", *names])
        for i, day in enumerate(ts.dates):
            row = [day.isoformat(), _format_value(ts.values[i])]
            row += [_format_value(ts.covariates[n][i]) for n in names]
            writer.writerow(row)
