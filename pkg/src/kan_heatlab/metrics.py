"""Regression metrics (R², MAPE, SMAPE, Pearson, MSE) and seed
aggregation helpers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError

__all__ = ["Metrics", "r2", "mape", "smape", "pearson", "mse", "compute_metrics",
           "MeanStd", "aggregate"]

MAPE_FLOOR = 1e-9


def _check(y, yhat):
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape or y.ndim != 1 or y.size == 0:
        raise DataError("metrics need equal-length nonempty 1-D arrays")
    return y, yhat


def r2(y, yhat) -> float:
    y, yhat = _check(y, yhat)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise DataError("r2 undefined for zero-variance truth")
    return 1.0 - float(np.sum((y - yhat) ** 2)) / ss_tot


def mape(y, yhat, return_excluded: bool = False):
    """Mean absolute percentage error (%); rows with |y| < 1e-9 are
    excluded and counted."""
    y, yhat = _check(y, yhat)
    keep = np.abs(y) >= MAPE_FLOOR
    excluded = int(np.sum(~keep))
    if not keep.any():
        value = float("nan")
    else:
        value = float(np.mean(np.abs(y[keep] - yhat[keep]) / np.abs(y[keep]))) * 100.0
    return (value, excluded) if return_excluded else value


def smape(y, yhat) -> float:
    """Symmetric MAPE in [0, 200]; 0/0 rows contribute zero."""
    y, yhat = _check(y, yhat)
    denom = np.abs(y) + np.abs(yhat)
    terms = np.where(denom > 0, 200.0 * np.abs(y - yhat) / np.where(denom > 0, denom, 1.0), 0.0)
    return float(np.mean(terms))


def pearson(y, yhat) -> float:
    y, yhat = _check(y, yhat)
    sy = y.std()
    sp = yhat.std()
    if sy == 0.0 or sp == 0.0:
        return float("nan")
    return float(np.mean((y - y.mean()) * (yhat - yhat.mean())) / (sy * sp))


def mse(y, yhat) -> float:
    y, yhat = _check(y, yhat)
    return float(np.mean((y - yhat) ** 2))


@dataclass(frozen=True)
class Metrics:
    r2: float
    mape: float
    smape: float
    pearson: float
    mse: float


def compute_metrics(y, yhat) -> Metrics:
    return Metrics(r2(y, yhat), mape(y, yhat), smape(y, yhat),
                   pearson(y, yhat), mse(y, yhat))


@dataclass(frozen=True)
class MeanStd:
    mean: float
    std: float
    n: int


def aggregate(values) -> MeanStd:
    """Sample mean/std (ddof=1) over seeds, n recorded; std 0 for n=1."""
    arr = np.asarray([v for v in values if np.isfinite(v)], dtype=float)
    if arr.size == 0:
        return MeanStd(float("nan"), float("nan"), 0)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return MeanStd(float(arr.mean()), std, int(arr.size))
