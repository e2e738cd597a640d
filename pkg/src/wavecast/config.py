"""Experiment configuration: flat ``key = value`` text files.

One assignment per line; ``#`` starts a comment; the keys ``wave``,
``feature`` and ``segment`` may repeat (and accept comma-separated lists),
every other key at most once. Recognized keys:

data source        source (synthetic|csv), csv_path, date_column,
                   case_column, date_format (YYYY-MM-DD|DD/MM/YY),
                   covariates (comma list; default: every other column),
                   threshold, normalization
                   (running-max|fixed-global-max|none)
synthetic stream   wave (start:peak:end:height, repeated), synth_days,
                   synth_noise, synth_seed, synth_baseline,
                   synth_start (YYYY-MM-DD)
task               window, horizon, memory, mode (online|offline),
                   model (mlp|ar), pretrain_days,
                   feature (column:aggregator, repeated), feature_window
network/training   hidden (comma list of layer sizes), learning_rate,
                   beta1, beta2, epsilon, leaky_slope, output_bias,
                   epochs_per_step
protocol           repetitions, seed, out_dir,
                   segment (Name:YYYY-MM-DD:YYYY-MM-DD, repeated)
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from datetime import date, datetime
from pathlib import Path

from .errors import ConfigError
from .evaluation import SegmentSpec, default_segments
from .features import AGGREGATOR_NAMES
from .ingest import (
    DATE_FORMATS,
    DEFAULT_START_DATE,
    DEFAULT_STREAM_DAYS,
    DEFAULT_WAVES,
    FIXED_GLOBAL_MAX,
    RUNNING_MAX,
    WaveSpec,
)
from .mlp import TrainConfig

NO_NORMALIZATION = "none"
NORMALIZATION_CHOICES = (RUNNING_MAX, FIXED_GLOBAL_MAX, NO_NORMALIZATION)

REPEATED_KEYS = ("wave", "feature", "segment")


@dataclass
class ExperimentConfig:
    source: str = "synthetic"
    csv_path: str | None = None
    date_column: str = "date"
    case_column: str = "cases"
    date_format: str = "YYYY-MM-DD"
    covariates: tuple[str, ...] | None = None
    threshold: float = 100.0
    normalization: str = RUNNING_MAX
    waves: tuple[WaveSpec, ...] = DEFAULT_WAVES
    synth_days: int = DEFAULT_STREAM_DAYS
    synth_noise: float = 0.05
    synth_seed: int = 99
    synth_baseline: float = 120.0
    synth_start: date = DEFAULT_START_DATE
    window: int = 7
    horizon: int = 1
    memory: int = 1
    mode: str = "online"
    model: str = "mlp"
    pretrain_days: int = 30
    features: tuple[tuple[str, str], ...] = ()
    feature_window: int = 14
    hidden: tuple[int, ...] = (64,)
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    leaky_slope: float = 0.01
    output_bias: float = 0.01
    epochs_per_step: int = 1
    repetitions: int = 10
    seed: int = 42
    out_dir: str = "runs"
    segments: SegmentSpec = field(default_factory=default_segments)
    warnings: tuple[str, ...] = ()

    def train_config(self, repetition: int = 0) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            beta1=self.beta1,
            beta2=self.beta2,
            epsilon=self.epsilon,
            leaky_slope=self.leaky_slope,
            output_bias=self.output_bias,
            epochs_per_step=self.epochs_per_step,
            seed=self.seed + repetition,
        )


def read_entries(text: str) -> dict[str, list[str]]:
    """Split config text into raw key -> values, before typing."""
    entries: dict[str, list[str]] = {}
    for ln_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {ln_no}: expected key = value, got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"line {ln_no}: empty key or value")
        if key in REPEATED_KEYS:
            entries.setdefault(key, []).extend(
                v.strip() for v in value.split(",") if v.strip()
            )
        else:
            if key in entries:
                raise ConfigError(f"line {ln_no}: duplicate key {key!r}")
            entries[key] = [value]
    return entries


def _parse_typed(key: str, value: str, kind):
    try:
        return kind(value)
    except ValueError:
        raise ConfigError(f"{key}: expected {kind.__name__}, got {value!r}") from None


def _parse_date(key: str, value: str) -> date:
    try:
        return datetime.strptime(value, "%Y-%m-%d").date()
    except ValueError:
        raise ConfigError(f"{key}: expected YYYY-MM-DD, got {value!r}") from None


def _parse_wave(value: str) -> WaveSpec:
    parts = value.split(":")
    if len(parts) != 4:
        raise ConfigError(f"wave: expected start:peak:end:height, got {value!r}")
    try:
        return WaveSpec(int(parts[0]), int(parts[1]), int(parts[2]), float(parts[3]))
    except ValueError:
        raise ConfigError(f"wave: bad numbers in {value!r}") from None


def _parse_feature(value: str) -> tuple[str, str]:
    parts = value.split(":")
    if len(parts) != 2 or not parts[0] or not parts[1]:
        raise ConfigError(f"feature: expected column:aggregator, got {value!r}")
    column, aggregator = parts[0].strip(), parts[1].strip()
    if aggregator not in AGGREGATOR_NAMES:
        raise ConfigError(
            f"feature: unknown aggregator {aggregator!r}; choose from {AGGREGATOR_NAMES}"
        )
    return column, aggregator


def _parse_segment(value: str) -> tuple[str, date, date]:
    parts = value.split(":")
    if len(parts) != 3:
        raise ConfigError(f"segment: expected Name:YYYY-MM-DD:YYYY-MM-DD, got {value!r}")
    return (
        parts[0].strip(),
        _parse_date("segment", parts[1].strip()),
        _parse_date("segment", parts[2].strip()),
    )


_SCALAR_KEYS = {
    "source": str,
    "csv_path": str,
    "date_column": str,
    "case_column": str,
    "date_format": str,
    "threshold": float,
    "normalization": str,
    "synth_days": int,
    "synth_noise": float,
    "synth_seed": int,
    "synth_baseline": float,
    "window": int,
    "horizon": int,
    "memory": int,
    "mode": str,
    "model": str,
    "pretrain_days": int,
    "feature_window": int,
    "learning_rate": float,
    "beta1": float,
    "beta2": float,
    "epsilon": float,
    "leaky_slope": float,
    "output_bias": float,
    "epochs_per_step": int,
    "repetitions": int,
    "seed": int,
    "out_dir": str,
}


def build_config(entries: dict[str, list[str]], base_dir: Path | None = None) -> ExperimentConfig:
    """Type, default and validate raw entries into an ExperimentConfig."""
    cfg = ExperimentConfig()
    fields = {}
    for key, values in entries.items():
        if key in _SCALAR_KEYS:
            fields[key] = _parse_typed(key, values[0], _SCALAR_KEYS[key])
        elif key == "covariates":
            names = tuple(v.strip() for v in values[0].split(",") if v.strip())
            fields["covariates"] = names or None
        elif key == "hidden":
            fields["hidden"] = tuple(
                _parse_typed("hidden", v.strip(), int) for v in values[0].split(",")
            )
        elif key == "synth_start":
            fields["synth_start"] = _parse_date(key, values[0])
        elif key == "wave":
            fields["waves"] = tuple(_parse_wave(v) for v in values)
        elif key == "feature":
            fields["features"] = tuple(_parse_feature(v) for v in values)
        elif key == "segment":
            fields["segments"] = SegmentSpec(tuple(_parse_segment(v) for v in values))
        else:
            raise ConfigError(f"unknown key {key!r}")
    cfg = replace(cfg, **fields)
    if base_dir is not None and cfg.csv_path:
        cfg = replace(cfg, csv_path=str((base_dir / cfg.csv_path).resolve()))
    return _validate(cfg, set(entries))


def _validate(cfg: ExperimentConfig, given: set[str]) -> ExperimentConfig:
    warnings = []
    if cfg.source not in ("synthetic", "csv"):
        raise ConfigError(f"source: must be synthetic or csv, got {cfg.source!r}")
    if cfg.source == "csv" and not cfg.csv_path:
        raise ConfigError("csv_path: required when source = csv")
    if cfg.date_format not in DATE_FORMATS:
        raise ConfigError(f"date_format: must be one of {sorted(DATE_FORMATS)}")
    if cfg.normalization not in NORMALIZATION_CHOICES:
        raise ConfigError(f"normalization: must be one of {NORMALIZATION_CHOICES}")
    if cfg.mode not in ("online", "offline"):
        raise ConfigError(f"mode: must be online or offline, got {cfg.mode!r}")
    if cfg.model not in ("mlp", "ar"):
        raise ConfigError(f"model: must be mlp or ar, got {cfg.model!r}")
    for key in ("window", "horizon", "memory", "repetitions", "feature_window"):
        if getattr(cfg, key) < 1:
            raise ConfigError(f"{key}: must be >= 1")
    if cfg.threshold < 0:
        raise ConfigError("threshold: must be >= 0")
    if cfg.synth_noise < 0:
        raise ConfigError("synth_noise: must be >= 0")
    if cfg.synth_days < 1:
        raise ConfigError("synth_days: must be >= 1")
    if any(h < 1 for h in cfg.hidden):
        raise ConfigError(f"hidden: layer sizes must be >= 1, got {cfg.hidden}")
    cfg.train_config()  # range checks on the training hyper-parameters
    if cfg.mode == "offline":
        if cfg.features:
            raise ConfigError("feature: features are supported in online mode only")
        if cfg.pretrain_days < cfg.window + cfg.horizon:
            raise ConfigError(
                f"pretrain_days: must be >= window + horizon = {cfg.window + cfg.horizon}"
            )
    if cfg.model == "ar":
        if cfg.features:
            raise ConfigError("feature: the ar model takes raw lags only")
        if "memory" in given:
            warnings.append("M ignored for ar")
        if given & {"hidden", "learning_rate", "beta1", "beta2", "epsilon",
                    "leaky_slope", "output_bias", "epochs_per_step"}:
            warnings.append("training hyper-parameters ignored for ar")
        if cfg.normalization != NO_NORMALIZATION:
            warnings.append("normalization ignored for ar (fits raw counts)")
    return replace(cfg, warnings=tuple(warnings))


def parse_config_text(text: str, base_dir: Path | None = None) -> ExperimentConfig:
    return build_config(read_entries(text), base_dir)


def parse_config(path) -> ExperimentConfig:
    path = Path(path)
    return parse_config_text(path.read_text(), base_dir=path.parent)


def canonical_items(cfg: ExperimentConfig) -> list[tuple[str, str]]:
    """Deterministic (key, value) lines capturing every effective setting."""
    items = [
        ("source", cfg.source),
        ("csv_path", cfg.csv_path or ""),
        ("date_column", cfg.date_column),
        ("case_column", cfg.case_column),
        ("date_format", cfg.date_format),
        ("covariates", ",".join(cfg.covariates) if cfg.covariates else "*"),
        ("threshold", format(cfg.threshold, ".10g")),
        ("normalization", cfg.normalization),
        ("synth_days", str(cfg.synth_days)),
        ("synth_noise", format(cfg.synth_noise, ".10g")),
        ("synth_seed", str(cfg.synth_seed)),
        ("synth_baseline", format(cfg.synth_baseline, ".10g")),
        ("synth_start", cfg.synth_start.isoformat()),
        ("window", str(cfg.window)),
        ("horizon", str(cfg.horizon)),
        ("memory", str(cfg.memory)),
        ("mode", cfg.mode),
        ("model", cfg.model),
        ("pretrain_days", str(cfg.pretrain_days)),
        ("feature_window", str(cfg.feature_window)),
        ("hidden", ",".join(str(h) for h in cfg.hidden)),
        ("learning_rate", format(cfg.learning_rate, ".10g")),
        ("beta1", format(cfg.beta1, ".10g")),
        ("beta2", format(cfg.beta2, ".10g")),
        ("epsilon", format(cfg.epsilon, ".10g")),
        ("leaky_slope", format(cfg.leaky_slope, ".10g")),
        ("output_bias", format(cfg.output_bias, ".10g")),
        ("epochs_per_step", str(cfg.epochs_per_step)),
        ("repetitions", str(cfg.repetitions)),
        ("seed", str(cfg.seed)),
    ]
    for w in cfg.waves:
        items.append(("wave", f"{w.start}:{w.peak}:{w.end}:{format(w.height, '.10g')}"))
    for column, aggregator in cfg.features:
        items.append(("feature", f"{column}:{aggregator}"))
    for name, start, end in cfg.segments.waves:
        items.append(("segment", f"{name}:{start.isoformat()}:{end.isoformat()}"))
    return items


def canonical_text(cfg: ExperimentConfig) -> str:
    """Snapshot form of the config; excludes the output directory."""
    return "\n".join(f"{k} = {v}" for k, v in canonical_items(cfg)) + "\n"


def config_hash(cfg: ExperimentConfig) -> str:
    """Short stable identifier; names the run directory."""
    return hashlib.sha256(canonical_text(cfg).encode()).hexdigest()[:12]


@dataclass(frozen=True)
class GridEntry:
    label: str
    config_path: Path
    overrides: tuple[tuple[str, str], ...]

    def load(self) -> ExperimentConfig:
        entries = read_entries(self.config_path.read_text())
        for key, value in self.overrides:
            if key in REPEATED_KEYS:
                entries[key] = [v.strip() for v in value.split(",") if v.strip()]
            else:
                entries[key] = [value]
        return build_config(entries, base_dir=self.config_path.parent)


def parse_grid(path) -> list[GridEntry]:
    """A grid file lists one config per line: a path plus key=value overrides."""
    path = Path(path)
    entries = []
    for ln_no, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        config_path = path.parent / tokens[0]
        if not config_path.exists():
            raise ConfigError(f"{path}: line {ln_no}: config {tokens[0]!r} not found")
        overrides = []
        for token in tokens[1:]:
            if "=" not in token:
                raise ConfigError(f"{path}: line {ln_no}: expected key=value, got {token!r}")
            key, _, value = token.partition("=")
            if not key or not value:
                raise ConfigError(f"{path}: line {ln_no}: empty key or value in {token!r}")
            overrides.append((key, value))
        label = " ".join([Path(tokens[0]).stem, *tokens[1:]])
        entries.append(GridEntry(label, config_path, tuple(overrides)))
    if not entries:
        raise ConfigError(f"{path}: grid file lists no configurations")
    return entries
