"""Streaming case-count forecasting with incrementally trained models."""

from .ar import ArModel, fit_ar1, forecast as ar_forecast
from .config import (
    ExperimentConfig,
    canonical_text,
    config_hash,
    parse_config,
    parse_config_text,
    parse_grid,
)
from .errors import (
    ConfigError,
    DataError,
    EvaluationError,
    InsufficientDataError,
    NumericError,
    ParseError,
    WavecastError,
)
from .evaluation import (
    MetricsReport,
    SegmentMetrics,
    SegmentSpec,
    aggregate_repetitions,
    compute_segment_metrics,
    default_segments,
    mae,
    mape,
    render_csv,
    render_table,
    segment,
)
from .features import CASE_COLUMN, FeatureSpec, aggregate_window, default_feature_spec
from .ingest import (
    DEFAULT_WAVES,
    CsvSchema,
    Scale,
    TimeSeries,
    WaveSpec,
    WindowedExample,
    filter_low_counts,
    generate_synthetic_stream,
    impute_missing,
    make_windows,
    normalize,
    parse_csv,
    write_csv,
)
from .loop import (
    ArForecaster,
    ForecastRecord,
    MemoryQueue,
    MlpForecaster,
    records_to_csv,
    run_offline,
    run_online,
)
from .mlp import (
    Gradients,
    MlpModel,
    TrainConfig,
    adam_step,
    backward,
    forward,
    init_mlp,
    load_checkpoint,
    mse_loss,
    save_checkpoint,
    train_increment,
)
from .runner import RunResult, run_experiment, run_grid

__version__ = "0.1.0"
