"""Error metrics segmented by outbreak windows, aggregated over repetitions.

A forecast record belongs to the segment containing its first target date
(the earliest day the forecast is about); records are never split across
segment boundaries. ``waves`` is the union of the named wave subsets and
``normal`` is their complement, so waves + normal partition overall.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date

import numpy as np

from .errors import ConfigError, EvaluationError
from .loop import ForecastRecord

OVERALL = "overall"
WAVES = "waves"
NORMAL = "normal"

MAPE_GUARD = 1e-8


@dataclass(frozen=True)
class SegmentSpec:
    """Named, pairwise-disjoint date ranges (inclusive endpoints)."""

    waves: tuple[tuple[str, date, date], ...]

    def __post_init__(self):
        object.__setattr__(self, "waves", tuple(self.waves))
        for name, start, end in self.waves:
            if start > end:
                raise ConfigError(f"segment {name!r}: start {start} after end {end}")
        spans = sorted(self.waves, key=lambda w: w[1])
        for (name_a, _, end_a), (name_b, start_b, _) in zip(spans, spans[1:]):
            if start_b <= end_a:
                raise ConfigError(f"segments {name_a!r} and {name_b!r} overlap")

    def wave_of(self, day: date) -> str | None:
        for name, start, end in self.waves:
            if start <= day <= end:
                return name
        return None


def default_segments() -> SegmentSpec:
    """The five outbreak windows of the 2020-2022 Cyprus case stream."""
    return SegmentSpec((
        ("Wave 1", date(2020, 12, 13), date(2021, 1, 11)),
        ("Wave 2", date(2021, 4, 4), date(2021, 5, 3)),
        ("Wave 3", date(2021, 7, 2), date(2021, 7, 31)),
        ("Wave 4", date(2021, 12, 19), date(2022, 1, 7)),
        ("Wave 5", date(2022, 6, 17), date(2022, 7, 26)),
    ))


def _check_realized(records) -> None:
    if not records:
        raise EvaluationError("no records to evaluate")
    for r in records:
        if not np.isfinite(r.realized).all():
            raise EvaluationError(f"record issued {r.issue_date} not fully realized")


def mae(records: list[ForecastRecord]) -> float:
    """Mean over records of the per-record mean absolute error (case units)."""
    _check_realized(records)
    return float(np.mean([np.mean(np.abs(r.realized - r.predicted)) for r in records]))


def mape(records: list[ForecastRecord], guard: float = MAPE_GUARD) -> float:
    """Mean over records of the per-record mean absolute percentage error."""
    _check_realized(records)
    bad = sorted(
        t.isoformat()
        for r in records
        for t, y in zip(r.target_dates, r.realized)
        if abs(y) < guard
    )
    if bad:
        raise EvaluationError(
            "MAPE undefined for near-zero actuals on: " + ", ".join(bad)
        )
    return float(np.mean([
        100.0 * np.mean(np.abs(r.realized - r.predicted) / np.abs(r.realized))
        for r in records
    ]))


def segment(records, spec: SegmentSpec) -> dict[str, list[ForecastRecord]]:
    """Partition records into overall / waves / normal / each named wave."""
    groups: dict[str, list[ForecastRecord]] = {OVERALL: list(records)}
    per_wave: dict[str, list[ForecastRecord]] = {name: [] for name, *_ in spec.waves}
    normal: list[ForecastRecord] = []
    for r in records:
        name = spec.wave_of(r.target_dates[0])
        (per_wave[name] if name else normal).append(r)
    groups[WAVES] = [r for name in per_wave for r in per_wave[name]]
    groups[NORMAL] = normal
    groups.update(per_wave)
    return groups


@dataclass(frozen=True)
class SegmentMetrics:
    mae: float
    mape: float
    n_records: int


def compute_segment_metrics(records, spec: SegmentSpec) -> dict[str, SegmentMetrics]:
    """Per-segment MAE/MAPE for one repetition; empty segments are omitted."""
    out = {}
    for name, subset in segment(records, spec).items():
        if subset:
            out[name] = SegmentMetrics(mae(subset), mape(subset), len(subset))
    return out


@dataclass(frozen=True)
class SegmentStats:
    mae_mean: float
    mae_std: float
    mape_mean: float
    mape_std: float
    n_records: int


@dataclass
class MetricsReport:
    """Mean and population std-dev of each metric across repetitions."""

    segments: dict[str, SegmentStats]
    metadata: dict[str, str] = field(default_factory=dict)
    notes: tuple[str, ...] = ()


def aggregate_repetitions(per_rep, metadata=None, notes=()) -> MetricsReport:
    """Combine one segment-metrics mapping per repetition into a report."""
    per_rep = list(per_rep)
    if not per_rep:
        raise EvaluationError("no repetitions to aggregate")
    keys = list(per_rep[0])
    for rep in per_rep[1:]:
        if list(rep) != keys:
            raise EvaluationError(
                f"segment keys differ across repetitions: {keys} vs {list(rep)}"
            )
    segments = {}
    for name in keys:
        maes = np.array([rep[name].mae for rep in per_rep])
        mapes = np.array([rep[name].mape for rep in per_rep])
        counts = {rep[name].n_records for rep in per_rep}
        if len(counts) != 1:
            raise EvaluationError(f"segment {name!r}: record counts differ across repetitions")
        segments[name] = SegmentStats(
            float(maes.mean()),
            float(maes.std()),
            float(mapes.mean()),
            float(mapes.std()),
            counts.pop(),
        )
    return MetricsReport(segments, dict(metadata or {}), tuple(notes))


def render_csv(report: MetricsReport) -> str:
    """Machine-readable form: one row per (segment, metric)."""
    lines = [f"# {k} = {v}" for k, v in report.metadata.items()]
    lines.append("segment,metric,mean,std")
    for name, s in report.segments.items():
        lines.append(f"{name},mae,{s.mae_mean:.10g},{s.mae_std:.10g}")
        lines.append(f"{name},mape,{s.mape_mean:.10g},{s.mape_std:.10g}")
    return "\n".join(lines) + "\n"


def render_table(report: MetricsReport) -> str:
    """Aligned human-readable table: segments x MAE / MAPE, mean (std)."""
    rows = [("segment", "days", "MAE mean (std)", "MAPE% mean (std)")]
    for name, s in report.segments.items():
        rows.append((
            name,
            str(s.n_records),
            f"{s.mae_mean:.1f} ({s.mae_std:.1f})",
            f"{s.mape_mean:.1f} ({s.mape_std:.1f})",
        ))
    widths = [max(len(r[c]) for r in rows) for c in range(4)]
    lines = []
    if report.metadata:
        lines.append("  ".join(f"{k}={v}" for k, v in report.metadata.items()))
    for r in rows:
        lines.append(
            r[0].ljust(widths[0])
            + "  " + r[1].rjust(widths[1])
            + "  " + r[2].rjust(widths[2])
            + "  " + r[3].rjust(widths[3])
        )
    for note in report.notes:
        lines.append(f"note: {note}")
    return "\n".join(lines) + "\n"
