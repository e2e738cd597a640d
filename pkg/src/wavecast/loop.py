"""Prequential driver: forecast each day first, then learn from what came true.

With lookback L (the raw window size, or the feature window in feature
mode), horizon D and a stream of T days, the daily schedule is:

    day L .. L+D-1   forecast only; no target is fully observable yet
    day L+D .. T     pair the input that ended D days ago with the D values
                     that have just been realized, push the pair into the
                     bounded replay memory, train on the whole memory, then
                     forecast from the current input

One ForecastRecord is emitted per day from L to T inclusive. Forecasters
are duck-typed: anything with ``horizon``, ``predict(x) -> (D,)`` and
``train(memory) -> None`` plugs in, so the network and the autoregressive
baseline share this driver.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

from . import ar as ar_model
from .errors import ConfigError, InsufficientDataError
from .features import FeatureSpec, aggregate_window
from .ingest import Scale, TimeSeries, WindowedExample, make_windows
from .mlp import MlpModel, TrainConfig, forward, train_increment


class MemoryQueue:
    """Bounded FIFO of training examples.

    Appending at capacity evicts exactly the oldest item; iteration yields
    insertion order.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ConfigError(f"memory capacity must be >= 1, got {capacity}")
        self.capacity = int(capacity)
        self._items: deque = deque(maxlen=self.capacity)

    def append(self, example: WindowedExample) -> None:
        self._items.append(example)

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self):
        return iter(self._items)


@dataclass
class ForecastRecord:
    """One issued forecast: D predicted values and, once known, the truth.

    ``predicted`` and ``realized`` are in case units (denormalized);
    ``realized`` holds NaN for target days past the end of the stream.
    """

    issue_index: int
    issue_date: date
    predicted: np.ndarray
    target_dates: list[date]
    realized: np.ndarray

    def fully_realized(self) -> bool:
        return bool(np.isfinite(self.realized).all())


class MlpForecaster:
    """Adapter giving the network the driver's predict/train surface."""

    def __init__(self, model: MlpModel, cfg: TrainConfig):
        self.model = model
        self.cfg = cfg

    @property
    def horizon(self) -> int:
        return self.model.arch[-1]

    def predict(self, x) -> np.ndarray:
        return forward(self.model, x)

    def train(self, memory: MemoryQueue) -> None:
        train_increment(self.model, memory, self.cfg)


class ArForecaster:
    """Rolling AR(1): refits on each day's lookback window at predict time.

    With ``refit=False`` the first predict call fits once and every later
    call reuses the frozen parameters (the offline variant). Training on
    the replay memory is a no-op either way; the fit happens at predict.
    """

    def __init__(self, horizon: int, refit: bool = True):
        self.horizon = horizon
        self.refit = refit
        self.model = None

    def predict(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.refit or self.model is None:
            self.model = ar_model.fit_ar1(x)
        return ar_model.forecast(self.model, x[-1], self.horizon)

    def train(self, memory: MemoryQueue) -> None:
        pass


def _emit_nothing(event: dict) -> None:
    pass


def _input_at(ts: TimeSeries, day: int, window: int, featurizer: FeatureSpec | None):
    # day is 1-based; the input covers stream days day-window+1 .. day
    if featurizer is not None:
        return aggregate_window(ts, day - 1, featurizer)
    return ts.values[day - window : day].copy()


def _record_for(ts, scale, forecaster, day: int, x) -> ForecastRecord:
    y_hat = np.asarray(forecaster.predict(x), dtype=float)
    predicted = scale.denormalize(y_hat, day - 1) if scale else y_hat
    horizon = y_hat.size
    realized = np.full(horizon, np.nan)
    target_dates = []
    for k in range(horizon):
        idx = day + k  # 0-based stream position of target day day+1+k
        if idx < len(ts):
            raw = ts.values[idx] * (scale.factors[idx] if scale else 1.0)
            realized[k] = raw
            target_dates.append(ts.dates[idx])
        else:
            overflow = idx - (len(ts) - 1)
            target_dates.append(ts.dates[-1] + timedelta(days=overflow))
    return ForecastRecord(
        issue_index=day - 1,
        issue_date=ts.dates[day - 1],
        predicted=predicted,
        target_dates=target_dates,
        realized=realized,
    )


def run_online(
    ts: TimeSeries,
    forecaster,
    window: int,
    horizon: int,
    memory_size: int,
    featurizer: FeatureSpec | None = None,
    scale: Scale | None = None,
    on_event=None,
) -> list[ForecastRecord]:
    """Run the incremental predict-then-train schedule over the stream.

    In feature mode the lookback is the featurizer's window and ``window``
    is ignored. ``on_event`` receives {"kind": "predict"|"append"|"train",
    "day": t, ...} dicts for instrumentation; days are 1-based stream
    positions.
    """
    if window < 1 or horizon < 1:
        raise ConfigError("window and horizon must be >= 1")
    lookback = featurizer.window if featurizer is not None else window
    total = len(ts)
    if total < lookback + horizon:
        raise InsufficientDataError(
            f"stream of {total} days is shorter than lookback {lookback} + horizon {horizon}"
        )
    emit = on_event or _emit_nothing
    memory = MemoryQueue(memory_size)
    records = []
    for day in range(lookback, total + 1):
        if day >= lookback + horizon:
            paired_day = day - horizon
            example = WindowedExample(
                x=_input_at(ts, paired_day, window, featurizer),
                y=ts.values[paired_day : paired_day + horizon].copy(),
                issue_date=ts.dates[paired_day - 1],
                target_dates=list(ts.dates[paired_day : paired_day + horizon]),
            )
            memory.append(example)
            emit({
                "kind": "append",
                "day": day,
                "window_end_day": paired_day,
                "target_days": list(range(paired_day + 1, day + 1)),
                "example": example,
            })
            forecaster.train(memory)
            emit({"kind": "train", "day": day, "memory_len": len(memory)})
        x = _input_at(ts, day, window, featurizer)
        records.append(_record_for(ts, scale, forecaster, day, x))
        emit({"kind": "predict", "day": day})
    return records


def run_offline(
    ts: TimeSeries,
    forecaster,
    window: int,
    horizon: int,
    pretrain_days: int = 30,
    scale: Scale | None = None,
    on_event=None,
) -> list[ForecastRecord]:
    """Train once on an initial slice, freeze, then forecast the rest.

    All windowed examples inside the first ``pretrain_days`` are presented
    chronologically in a single train call; afterwards a record is emitted
    for every day from pretrain_days to the stream end with no updates.
    """
    if pretrain_days < window + horizon:
        raise ConfigError(
            f"pretrain_days must be >= window + horizon = {window + horizon}, got {pretrain_days}"
        )
    if len(ts) < pretrain_days:
        raise InsufficientDataError(
            f"stream of {len(ts)} days is shorter than pretrain_days {pretrain_days}"
        )
    emit = on_event or _emit_nothing
    examples = make_windows(ts.slice(0, pretrain_days), window, horizon)
    pretrain = MemoryQueue(len(examples))
    for example in examples:
        pretrain.append(example)
    forecaster.train(pretrain)
    emit({"kind": "pretrain", "n_examples": len(examples)})
    records = []
    for day in range(pretrain_days, len(ts) + 1):
        x = ts.values[day - window : day].copy()
        records.append(_record_for(ts, scale, forecaster, day, x))
        emit({"kind": "predict", "day": day})
    return records


def _format_value(v: float) -> str:
    return "" if not np.isfinite(v) else format(float(v), ".10g")


def records_to_csv(records: list[ForecastRecord], horizon: int) -> str:
    """Render records as CSV: issue date, D predictions, D realized values
    (empty cells where the truth lies past the stream end)."""
    head = ["issue_date"]
    head += [f"pred_{k + 1}" for k in range(horizon)]
    head += [f"actual_{k + 1}" for k in range(horizon)]
    lines = [",".join(head)]
    for r in records:
        cells = [r.issue_date.isoformat()]
        cells += [_format_value(v) for v in r.predicted]
        cells += [_format_value(v) for v in r.realized]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
