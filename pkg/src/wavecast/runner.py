"""Experiment execution: configured pipelines, repetitions, disk artifacts.

Each experiment owns one directory named by its config hash and containing
config.snapshot, predictions_rep<r>.csv, metrics.csv, metrics.txt and
plotdata.csv. A failed run leaves a FAILED marker instead. Repetition r
re-seeds only the network (seed + r); the data pipeline is shared.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, GridEntry, canonical_text, config_hash, parse_grid
from .errors import WavecastError
from .evaluation import (
    NORMAL,
    OVERALL,
    WAVES,
    MetricsReport,
    aggregate_repetitions,
    compute_segment_metrics,
    render_csv,
    render_table,
)
from .features import FeatureSpec
from .ingest import (
    CsvSchema,
    Scale,
    TimeSeries,
    filter_low_counts,
    generate_synthetic_stream,
    impute_missing,
    normalize,
    parse_csv,
)
from .loop import ArForecaster, ForecastRecord, MlpForecaster, records_to_csv, run_offline, run_online
from .mlp import init_mlp

logger = logging.getLogger("wavecast")

OUT_ROOT_ENV = "WAVECAST_OUT"
FAILED_MARKER = "FAILED"


@dataclass
class RunResult:
    run_dir: Path
    report: MetricsReport


def prepare_stream(cfg: ExperimentConfig) -> tuple[TimeSeries, Scale | None]:
    """Load or synthesize the stream, then impute, filter and normalize."""
    if cfg.source == "synthetic":
        ts = generate_synthetic_stream(
            cfg.waves,
            noise=cfg.synth_noise,
            seed=cfg.synth_seed,
            n_days=cfg.synth_days,
            start_date=cfg.synth_start,
            baseline=cfg.synth_baseline,
        )
    else:
        schema = CsvSchema(
            date_column=cfg.date_column,
            case_column=cfg.case_column,
            date_format=cfg.date_format,
            covariate_columns=cfg.covariates,
        )
        ts = impute_missing(parse_csv(cfg.csv_path, schema))
    ts = filter_low_counts(ts, cfg.threshold)
    if cfg.model == "ar" or cfg.normalization == "none":
        return ts, None
    return normalize(ts, cfg.normalization)


def _featurizer(cfg: ExperimentConfig) -> FeatureSpec | None:
    if not cfg.features:
        return None
    return FeatureSpec(items=cfg.features, window=cfg.feature_window)


def build_forecaster(cfg: ExperimentConfig, repetition: int):
    if cfg.model == "ar":
        return ArForecaster(cfg.horizon, refit=cfg.mode == "online")
    input_dim = len(cfg.features) if cfg.features else cfg.window
    train_cfg = cfg.train_config(repetition)
    model = init_mlp((input_dim, *cfg.hidden, cfg.horizon), train_cfg)
    return MlpForecaster(model, train_cfg)


def run_repetition(
    cfg: ExperimentConfig, ts: TimeSeries, scale: Scale | None, repetition: int
) -> list[ForecastRecord]:
    forecaster = build_forecaster(cfg, repetition)
    if cfg.mode == "online":
        return run_online(
            ts,
            forecaster,
            cfg.window,
            cfg.horizon,
            cfg.memory,
            featurizer=_featurizer(cfg),
            scale=scale,
        )
    return run_offline(ts, forecaster, cfg.window, cfg.horizon, cfg.pretrain_days, scale=scale)


def _format_value(v: float) -> str:
    return "" if not np.isfinite(v) else format(float(v), ".10g")


def _plotdata_csv(all_records: list[list[ForecastRecord]]) -> str:
    """Daily first-horizon view: actual vs mean prediction with a std band."""
    lines = ["date,actual,pred_mean,pred_std"]
    for i, record in enumerate(all_records[0]):
        first = np.array([records[i].predicted[0] for records in all_records])
        lines.append(",".join([
            record.target_dates[0].isoformat(),
            _format_value(record.realized[0]),
            _format_value(first.mean()),
            _format_value(first.std()),
        ]))
    return "\n".join(lines) + "\n"


def _execute(cfg: ExperimentConfig, run_dir: Path) -> RunResult:
    ts, scale = prepare_stream(cfg)
    notes = list(cfg.warnings)
    repetitions = cfg.repetitions
    if cfg.model == "ar":
        if repetitions > 1:
            notes.append("ar is deterministic; repetitions collapsed to 1")
        repetitions = 1
        notes.append("ar refit: rolling, daily, on the trailing window"
                     if cfg.mode == "online"
                     else "ar fit once on the first prediction window, then frozen")
    all_records = []
    per_rep = []
    for r in range(repetitions):
        records = run_repetition(cfg, ts, scale, r)
        all_records.append(records)
        realized = [rec for rec in records if rec.fully_realized()]
        per_rep.append(compute_segment_metrics(realized, cfg.segments))
        (run_dir / f"predictions_rep{r}.csv").write_text(records_to_csv(records, cfg.horizon))
    metadata = {
        "config_hash": config_hash(cfg),
        "model": cfg.model,
        "mode": cfg.mode,
        "W": str(cfg.window),
        "D": str(cfg.horizon),
        "M": str(cfg.memory),
        "repetitions": str(repetitions),
        "seeds": ",".join(str(cfg.seed + r) for r in range(repetitions)),
        "normalization": "none" if scale is None else scale.mode,
    }
    report = aggregate_repetitions(per_rep, metadata, notes)
    (run_dir / "config.snapshot").write_text(canonical_text(cfg))
    (run_dir / "metrics.csv").write_text(render_csv(report))
    (run_dir / "metrics.txt").write_text(render_table(report))
    (run_dir / "plotdata.csv").write_text(_plotdata_csv(all_records))
    return RunResult(run_dir, report)


def resolve_out_root(cfg: ExperimentConfig, out_root=None) -> Path:
    return Path(out_root or os.environ.get(OUT_ROOT_ENV) or cfg.out_dir)


def run_experiment(cfg: ExperimentConfig, out_root=None) -> RunResult:
    """Run every repetition of one configuration and write its artifacts."""
    for message in cfg.warnings:
        logger.warning(message)
    run_dir = resolve_out_root(cfg, out_root) / config_hash(cfg)
    run_dir.mkdir(parents=True, exist_ok=True)
    marker = run_dir / FAILED_MARKER
    if marker.exists():
        marker.unlink()
    try:
        result = _execute(cfg, run_dir)
    except Exception as exc:
        marker.write_text(f"{type(exc).__name__}: {exc}\n")
        raise
    logger.info("run %s complete: %s", config_hash(cfg), run_dir)
    return result


def _varied_keys(configs: list[ExperimentConfig]) -> list[str]:
    from .config import canonical_items

    seen: dict[str, set[str]] = {}
    order: list[str] = []
    for cfg in configs:
        grouped: dict[str, list[str]] = {}
        for key, value in canonical_items(cfg):
            grouped.setdefault(key, []).append(value)
        for key, values in grouped.items():
            if key not in seen:
                seen[key] = set()
                order.append(key)
            seen[key].add("|".join(values))
    return [k for k in order if len(seen[k]) > 1]


_SUMMARY_SEGMENTS = (OVERALL, WAVES, NORMAL)


@dataclass
class GridResult:
    summary_path: Path
    rows: list[dict[str, str]]


def run_grid(grid_path, out_root=None) -> GridResult:
    """Run every config in a grid file; one summary row per config.

    A failing row is recorded with its error and the remaining rows still
    run. The summary CSV is keyed by the parameters that vary across rows.
    """
    grid_path = Path(grid_path)
    entries: list[GridEntry] = parse_grid(grid_path)
    configs = [entry.load() for entry in entries]
    varied = _varied_keys(configs)
    root = Path(out_root or os.environ.get(OUT_ROOT_ENV) or configs[0].out_dir)
    rows = []
    for entry, cfg in zip(entries, configs):
        row: dict[str, str] = {"config": entry.label}
        grouped: dict[str, list[str]] = {}
        from .config import canonical_items

        for key, value in canonical_items(cfg):
            grouped.setdefault(key, []).append(value)
        for key in varied:
            row[key] = ";".join(grouped.get(key, []))
        try:
            result = run_experiment(cfg, out_root=root)
        except WavecastError as exc:
            logger.warning("grid row %r failed: %s", entry.label, exc)
            row["status"] = f"failed: {exc}"
            rows.append(row)
            continue
        row["status"] = "ok"
        for name in _SUMMARY_SEGMENTS:
            stats = result.report.segments.get(name)
            row[f"{name}_mae_mean"] = "" if stats is None else format(stats.mae_mean, ".10g")
            row[f"{name}_mae_std"] = "" if stats is None else format(stats.mae_std, ".10g")
            row[f"{name}_mape_mean"] = "" if stats is None else format(stats.mape_mean, ".10g")
            row[f"{name}_mape_std"] = "" if stats is None else format(stats.mape_std, ".10g")
        rows.append(row)
    columns = ["config", *varied, "status"]
    for name in _SUMMARY_SEGMENTS:
        columns += [f"{name}_mae_mean", f"{name}_mae_std", f"{name}_mape_mean", f"{name}_mape_std"]
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(row.get(c, "") for c in columns))
    root.mkdir(parents=True, exist_ok=True)
    summary_path = root / f"{grid_path.stem}_summary.csv"
    summary_path.write_text("\n".join(lines) + "\n")
    logger.info("grid summary written to %s", summary_path)
    return GridResult(summary_path, rows)
