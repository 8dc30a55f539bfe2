"""Regression metrics, all computed on log-space targets."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

METRIC_NAMES = ("r2", "mae", "smape", "rmse", "rmsle")


def _pair(y, yhat):
    y = np.asarray(y, dtype=float).ravel()
    yhat = np.asarray(yhat, dtype=float).ravel()
    if y.shape != yhat.shape:
        raise ValueError(f"yhat: length {yhat.size} differs from y length {y.size}")
    if y.size == 0:
        raise ValueError("y: need at least one value")
    return y, yhat


def r2(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    if y.size < 2:
        raise ValueError("y: R^2 needs at least two values")
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0:
        raise ValueError("y: R^2 undefined for a constant target")
    return 1.0 - float(np.sum((y - yhat) ** 2)) / ss_tot


def mae(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    return float(np.mean(np.abs(y - yhat)))


def rmse(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    return math.sqrt(float(np.mean((y - yhat) ** 2)))


def smape(y, yhat) -> float:
    """Symmetric MAPE in percent, range [0, 200]; 0/0 terms count as 0."""
    y, yhat = _pair(y, yhat)
    denom = (np.abs(y) + np.abs(yhat)) / 2.0
    num = np.abs(y - yhat)
    terms = np.divide(num, denom, out=np.zeros_like(num), where=denom > 0)
    return float(100.0 * np.mean(terms))


def rmsle(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    if np.any(y <= -1) or np.any(yhat <= -1):
        raise ValueError("y: RMSLE needs all values greater than -1")
    d = np.log1p(yhat) - np.log1p(y)
    return math.sqrt(float(np.mean(d * d)))


@dataclass(frozen=True)
class MetricSet:
    r2: float
    mae: float
    smape: float
    rmse: float
    rmsle: float

    def as_dict(self) -> dict:
        return asdict(self)


def compute_metrics(y, yhat) -> MetricSet:
    return MetricSet(r2(y, yhat), mae(y, yhat), smape(y, yhat), rmse(y, yhat), rmsle(y, yhat))
