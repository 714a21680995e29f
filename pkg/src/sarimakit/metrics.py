"""Forecast accuracy measures."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import LengthMismatch, ZeroActualForMape


@dataclass(frozen=True)
class AccuracyReport:
    mse: float
    rmse: float
    mape: float  # percent

    def to_dict(self) -> dict:
        return asdict(self)


def accuracy(actual, predicted) -> AccuracyReport:
    a = np.asarray(actual, dtype=float).reshape(-1)
    p = np.asarray(predicted, dtype=float).reshape(-1)
    if a.size != p.size or a.size == 0:
        raise LengthMismatch(f"need equal non-empty sequences, got {a.size} and {p.size}")
    if np.any(a == 0):
        raise ZeroActualForMape("MAPE is undefined when an actual value is zero")
    err = a - p
    mse = float(np.mean(err ** 2))
    return AccuracyReport(mse, math.sqrt(mse), float(100.0 * np.mean(np.abs(err) / np.abs(a))))
