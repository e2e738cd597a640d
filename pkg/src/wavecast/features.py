"""Aggregated feature vectors over a trailing window of the stream."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InsufficientDataError
from .ingest import TimeSeries

CASE_COLUMN = "cases"

_AGGREGATORS = {
    "mean": np.mean,
    "min": np.min,
    "max": np.max,
    "median": np.median,
    "range": np.ptp,
    "std": lambda a: float(np.std(a)),  # population form, divide by window
}
AGGREGATOR_NAMES = tuple(_AGGREGATORS)


@dataclass(frozen=True)
class FeatureSpec:
    """Ordered (column, aggregator) pairs evaluated over a trailing window.

    Column ``"cases"`` addresses the case count itself; any other name must
    be a covariate of the stream.
    """

    items: tuple[tuple[str, str], ...]
    window: int = 14

    def __post_init__(self):
        object.__setattr__(self, "items", tuple((c, a) for c, a in self.items))
        if not self.items:
            raise ConfigError("feature spec needs at least one item")
        for col, agg in self.items:
            if agg not in _AGGREGATORS:
                raise ConfigError(
                    f"unknown aggregator {agg!r} for column {col!r}; "
                    f"choose from {AGGREGATOR_NAMES}"
                )
        if self.window < 1:
            raise ConfigError("feature window must be >= 1")
        if self.window < 2 and any(a in ("std", "range") for _, a in self.items):
            raise ConfigError("feature window must be >= 2 for std or range")

    def __len__(self) -> int:
        return len(self.items)


def aggregate_window(ts: TimeSeries, end_day: int, spec: FeatureSpec) -> np.ndarray:
    """Feature vector over stream days [end_day - window + 1, end_day].

    Uses only data at days <= end_day, so the vector is safe to feed a
    model forecasting past end_day.
    """
    if end_day < spec.window - 1:
        raise InsufficientDataError(
            f"window of {spec.window} days does not fit before day {end_day}"
        )
    if end_day >= len(ts):
        raise InsufficientDataError(f"day {end_day} beyond stream end {len(ts) - 1}")
    lo = end_day - spec.window + 1
    out = np.empty(len(spec.items))
    for k, (col, agg) in enumerate(spec.items):
        if col == CASE_COLUMN:
            series = ts.values
        else:
            try:
                series = ts.covariates[col]
            except KeyError:
                raise ConfigError(
                    f"unknown column {col!r}; stream has "
                    f"{[CASE_COLUMN, *ts.covariates]}"
                ) from None
        out[k] = _AGGREGATORS[agg](series[lo : end_day + 1])
    return out


def default_feature_spec() -> FeatureSpec:
    """The stock 20-feature set over a 14-day window.

    Mixes policy-strictness indices, vaccination counts, age-stratified
    cases and surveillance series; expects a dataset providing covariates
    under these names.
    """
    return FeatureSpec(
        items=(
            ("school_closing", "mean"),
            ("public_events", "mean"),
            ("cases", "min"),
            ("cases", "max"),
            ("unvaccinated_cases", "min"),
            ("unvaccinated_cases", "median"),
            ("second_dose_population", "min"),
            ("second_dose_population", "range"),
            ("second_dose_cases", "mean"),
            ("second_dose_cases", "median"),
            ("first_dose_cases", "median"),
            ("first_dose_cases", "mean"),
            ("weekly_deaths", "mean"),
            ("workplace_closing", "mean"),
            ("weekly_icu", "mean"),
            ("stringency_index", "median"),
            ("recovered", "std"),
            ("cases_70_plus", "mean"),
            ("first_dose_population", "median"),
            ("cases_18_24", "mean"),
        ),
        window=14,
    )
