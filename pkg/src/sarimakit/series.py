"""Monthly calendar-indexed series, differencing and train/test splits."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import ArityMismatch, DataError, LengthTooShort, OutOfRange

_MONTH_RE = re.compile(r"^\s*(\d{4})-(\d{1,2})\s*$")


@dataclass(frozen=True, order=True)
class MonthStamp:
    """A (year, month) pair ordered lexicographically."""

    year: int
    month: int

    def __post_init__(self):
        if not 1 <= self.month <= 12:
            raise DataError(f"month must be in 1..12, got {self.month}")

    @classmethod
    def parse(cls, text: str) -> "MonthStamp":
        m = _MONTH_RE.match(text)
        if not m:
            raise DataError(f"expected YYYY-MM, got {text!r}")
        return cls(int(m.group(1)), int(m.group(2)))

    @property
    def ordinal(self) -> int:
        return self.year * 12 + (self.month - 1)

    @classmethod
    def from_ordinal(cls, k: int) -> "MonthStamp":
        return cls(k // 12, k % 12 + 1)

    def shift(self, months: int) -> "MonthStamp":
        return MonthStamp.from_ordinal(self.ordinal + months)

    def successor(self) -> "MonthStamp":
        return self.shift(1)

    def months_until(self, other: "MonthStamp") -> int:
        return other.ordinal - self.ordinal

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"


class TimeSeries:
    """Gap-free monthly series; value ``i`` belongs to ``start.shift(i)``.

    Instances are immutable: the value array is copied and flagged read-only.
    """

    __slots__ = ("_start", "_values")

    def __init__(self, start: MonthStamp, values: Sequence[float] | np.ndarray, *, allow_empty: bool = False):
        arr = np.array(values, dtype=float).reshape(-1)
        if arr.size == 0 and not allow_empty:
            raise DataError("a time series needs at least one observation")
        if not np.all(np.isfinite(arr)):
            bad = int(np.flatnonzero(~np.isfinite(arr))[0])
            raise DataError(f"non-finite value at {start.shift(bad)}")
        arr.flags.writeable = False
        self._start = start
        self._values = arr

    @property
    def start(self) -> MonthStamp:
        return self._start

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def end(self) -> MonthStamp:
        return self._start.shift(len(self._values) - 1)

    def __len__(self) -> int:
        return len(self._values)

    def __iter__(self) -> Iterator[tuple[MonthStamp, float]]:
        for i, v in enumerate(self._values):
            yield self._start.shift(i), float(v)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return self._start == other._start and np.array_equal(self._values, other._values)

    def __repr__(self) -> str:
        return f"TimeSeries(start={self._start}, n={len(self)})"

    def months(self) -> list[MonthStamp]:
        return [self._start.shift(i) for i in range(len(self))]

    def index_of(self, month: MonthStamp) -> int:
        i = self._start.months_until(month)
        if not 0 <= i < len(self):
            raise OutOfRange(f"{month} is outside {self._start}..{self.end}")
        return i

    def window(self, first: MonthStamp, last: MonthStamp) -> "TimeSeries":
        """Inclusive sub-range ``first..last``."""
        i, j = self.index_of(first), self.index_of(last)
        if j < i:
            raise OutOfRange(f"empty window {first}..{last}")
        return TimeSeries(first, self._values[i:j + 1])

    def with_values(self, values) -> "TimeSeries":
        return TimeSeries(self._start, values)


@dataclass(frozen=True)
class DataSplits:
    training: TimeSeries
    test: TimeSeries
    comparison: TimeSeries


def _apply_diff(x: np.ndarray, d: int, D: int, s: int) -> np.ndarray:
    for _ in range(D):
        x = x[s:] - x[:-s]
    for _ in range(d):
        x = x[1:] - x[:-1]
    return x


def difference_values(values, d: int, D: int, s: int) -> np.ndarray:
    x = np.asarray(values, dtype=float)
    if d < 0 or D < 0 or s < 1:
        raise DataError(f"invalid differencing orders d={d}, D={D}, s={s}")
    if len(x) <= d + D * s:
        raise LengthTooShort(f"series of length {len(x)} cannot be differenced with d={d}, D={D}, s={s}")
    return _apply_diff(x, d, D, s)


def difference(series: TimeSeries, d: int, D: int, s: int) -> TimeSeries:
    """Apply ``(1 - B)^d (1 - B^s)^D``, seasonal part first.

    The result starts ``d + D*s`` months after the input.
    """
    out = difference_values(series.values, d, D, s)
    return TimeSeries(series.start.shift(d + D * s), out)


def integration_filter(d: int, D: int, s: int) -> np.ndarray:
    """Coefficients ``c`` with ``(1-B)^d (1-B^s)^D = 1 - sum_k c_k B^k``."""
    poly = np.array([1.0])
    for _ in range(D):
        seas = np.zeros(s + 1)
        seas[0], seas[s] = 1.0, -1.0
        poly = np.convolve(poly, seas)
    for _ in range(d):
        poly = np.convolve(poly, [1.0, -1.0])
    return -poly[1:]


def integrate_values(diffed, d: int, D: int, s: int, initial_values) -> np.ndarray:
    """Invert :func:`difference_values` given the ``d + D*s`` leading levels."""
    m = d + D * s
    init = np.asarray(initial_values, dtype=float).reshape(-1)
    if init.size != m:
        raise ArityMismatch(f"expected {m} initial values, got {init.size}")
    w = np.asarray(diffed, dtype=float).reshape(-1)
    c = integration_filter(d, D, s)
    y = np.empty(m + w.size)
    y[:m] = init
    for t in range(w.size):
        acc = w[t]
        for k in range(m):
            if c[k] != 0.0:
                acc += c[k] * y[m + t - k - 1]
        y[m + t] = acc
    return y


def integrate(diffed: TimeSeries, d: int, D: int, s: int, initial_values) -> TimeSeries:
    m = d + D * s
    y = integrate_values(diffed.values, d, D, s, initial_values)
    return TimeSeries(diffed.start.shift(-m), y)


def split(series: TimeSeries, train_end: MonthStamp, test_len: int) -> DataSplits:
    """Cut ``series`` into training (through ``train_end``), test and comparison."""
    if test_len < 0:
        raise OutOfRange("test length must be non-negative")
    i = series.index_of(train_end)
    n_train = i + 1
    if n_train + test_len > len(series):
        raise OutOfRange(
            f"{test_len} test observations requested after {train_end}, "
            f"only {len(series) - n_train} available"
        )
    v = series.values
    training = TimeSeries(series.start, v[:n_train])
    test = TimeSeries(train_end.shift(1), v[n_train:n_train + test_len], allow_empty=True)
    comparison = TimeSeries(train_end.shift(1 + test_len), v[n_train + test_len:], allow_empty=True)
    return DataSplits(training, test, comparison)
