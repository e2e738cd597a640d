"""First-order autoregressive baseline fit by ordinary least squares."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, InsufficientDataError


@dataclass(frozen=True)
class ArModel:
    """value_t = intercept + coefficient * value_{t-1}, iterated for multi-step."""

    intercept: float
    coefficient: float
    fit_window: int


def fit_ar1(history) -> ArModel:
    """Least-squares regression of each value on its predecessor.

    The fit is the exact minimizer of the squared one-step residuals over
    the window. A constant window carries no predictor variance, so the
    fit degenerates to coefficient 0 with the target mean as intercept.
    """
    h = np.asarray(history, dtype=float)
    if h.ndim != 1:
        raise DataError("history must be one-dimensional")
    if h.size < 3:
        raise InsufficientDataError(f"AR(1) fit needs >= 3 values, got {h.size}")
    if not np.isfinite(h).all():
        raise DataError("history contains non-finite values")
    lagged, target = h[:-1], h[1:]
    if np.ptp(lagged) == 0.0:
        return ArModel(float(target.mean()), 0.0, h.size)
    design = np.column_stack([np.ones(lagged.size), lagged])
    (intercept, coefficient), *_ = np.linalg.lstsq(design, target, rcond=None)
    return ArModel(float(intercept), float(coefficient), h.size)


def forecast(model: ArModel, last_value: float, horizon: int) -> np.ndarray:
    """Recursive multi-step forecast seeded by the last observed value."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    out = np.empty(horizon)
    level = float(last_value)
    for k in range(horizon):
        level = model.intercept + model.coefficient * level
        out[k] = level
    return out
