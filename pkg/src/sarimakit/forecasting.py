"""Level forecasts with 80% and 95% bands."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import DataError, HorizonZero, NotConverged
from .estimation import FitResult
from .kernel import ModelOrder, ParamVector, _psi_from_polys, expand, kalman_filter, simulate
from .series import MonthStamp, TimeSeries, difference_values, integrate_values, integration_filter

# standard normal quantiles, 9 decimals
Z80 = 1.281551566
Z95 = 1.959963985

CSV_HEADER = ("date", "mean", "se", "lo80", "hi80", "lo95", "hi95")


@dataclass(frozen=True)
class Forecast:
    start: MonthStamp
    mean: np.ndarray
    se: np.ndarray
    lo80: np.ndarray
    hi80: np.ndarray
    lo95: np.ndarray
    hi95: np.ndarray

    @classmethod
    def from_moments(cls, start: MonthStamp, mean, se) -> "Forecast":
        mean = np.asarray(mean, dtype=float)
        se = np.asarray(se, dtype=float)
        return cls(start, mean, se, mean - Z80 * se, mean + Z80 * se, mean - Z95 * se, mean + Z95 * se)

    def __len__(self) -> int:
        return self.mean.size

    @property
    def end(self) -> MonthStamp:
        return self.start.shift(len(self) - 1)

    def months(self) -> list[MonthStamp]:
        return [self.start.shift(i) for i in range(len(self))]

    def slice(self, first: MonthStamp, last: MonthStamp) -> "Forecast":
        i = self.start.months_until(first)
        j = self.start.months_until(last)
        if i < 0 or j >= len(self) or j < i:
            raise DataError(f"{first}..{last} is not inside the forecast range {self.start}..{self.end}")
        sl = slice(i, j + 1)
        return Forecast(first, self.mean[sl], self.se[sl], self.lo80[sl], self.hi80[sl],
                        self.lo95[sl], self.hi95[sl])

    def rows(self):
        for i, m in enumerate(self.months()):
            yield (m, self.mean[i], self.se[i], self.lo80[i], self.hi80[i], self.lo95[i], self.hi95[i])

    def to_csv(self, fmt=repr) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for m, *vals in self.rows():
            w.writerow([str(m)] + [fmt(float(v)) for v in vals])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Forecast":
        reader = csv.reader(io.StringIO(text))
        header = tuple(h.strip() for h in next(reader))
        if header != CSV_HEADER:
            raise DataError(f"forecast CSV header must be {','.join(CSV_HEADER)}")
        months, cols = [], []
        for row in reader:
            if not row:
                continue
            months.append(MonthStamp.parse(row[0]))
            cols.append([float(x) for x in row[1:7]])
        if not months:
            raise DataError("forecast CSV has no rows")
        for a, b in zip(months, months[1:]):
            if a.successor() != b:
                raise DataError(f"forecast months are not consecutive at {b}")
        arr = np.array(cols).T
        return cls(months[0], *arr)


def _augmented_moments(order: ModelOrder, params: ParamVector, filt, tail: np.ndarray, h: int):
    """Level-scale means and variances from the state augmented with past levels.

    The augmented state is ``[alpha_t; y_{t-1}, ..., y_{t-m}]`` and
    ``y_t = alpha_{1,t} + sum_k c_k y_{t-k}``.
    """
    r = filt.phi.size
    m = order.n_diff
    c = integration_filter(order.d, order.D, order.s)
    dim = r + m
    A = np.zeros((dim, dim))
    A[:r, 0] = filt.phi
    A[np.arange(r - 1), np.arange(1, r)] = 1.0
    if m:
        A[r, 0] = 1.0
        A[r, r:] = c
        A[np.arange(r + 1, dim), np.arange(r, dim - 1)] = 1.0
    Q = np.zeros((dim, dim))
    Q[:r, :r] = np.outer(filt.theta, filt.theta)
    obs = np.zeros(dim)
    obs[0] = 1.0
    obs[r:] = c
    x = np.r_[filt.a_next, tail[::-1]]
    P = np.zeros((dim, dim))
    P[:r, :r] = filt.P_next
    means = np.empty(h)
    var = np.empty(h)
    for i in range(h):
        means[i] = obs @ x
        var[i] = obs @ P @ obs
        x = A @ x
        P = A @ P @ A.T + Q
    return means, params.sigma2 * var


def forecast_from_params(order: ModelOrder, params: ParamVector, training: TimeSeries, h: int) -> Forecast:
    """Forecast ``h`` months past the end of ``training`` using known parameters."""
    if h < 1:
        raise HorizonZero("forecast horizon must be at least 1")
    y = training.values
    w = difference_values(y, order.d, order.D, order.s)
    filt = kalman_filter(order, params, w)
    m = order.n_diff
    tail = y[y.size - m:] if m else np.zeros(0)

    # differenced-scale predictions, then integrate onto the levels
    wf = np.empty(h)
    a = filt.a_next.copy()
    for i in range(h):
        wf[i] = a[0]
        a = np.r_[filt.phi[:-1] * a[0] + a[1:], filt.phi[-1] * a[0]]
    mean = integrate_values(wf, order.d, order.D, order.s, tail)[m:] if m else wf

    _, var = _augmented_moments(order, params, filt, tail, h)
    se = np.sqrt(np.clip(var, 0.0, None))
    return Forecast.from_moments(training.end.successor(), mean, se)


def forecast(fit: FitResult, training: TimeSeries, h: int) -> Forecast:
    if not fit.converged:
        raise NotConverged(f"fit for {fit.order} did not converge; refusing to forecast")
    return forecast_from_params(fit.order, fit.params, training, h)


def level_psi_weights(order: ModelOrder, params: ParamVector, h: int) -> np.ndarray:
    """psi weights of the integrated model ``theta(B) / (phi(B) (1-B)^d (1-B^s)^D)``."""
    exp = expand(order, params)
    ar_poly = np.convolve(exp.ar_poly, np.r_[1.0, -integration_filter(order.d, order.D, order.s)])
    return _psi_from_polys(-ar_poly[1:], exp.ma_full, h)


def psi_level_se(order: ModelOrder, params: ParamVector, h: int) -> np.ndarray:
    """Infinite-past forecast standard errors ``sigma * sqrt(sum_{j<h} psi_j^2)``.

    Matches the state-space result once the filter has reached steady state
    (long samples, invertible MA).
    """
    psi = np.r_[1.0, level_psi_weights(order, params, h - 1)] if h > 1 else np.ones(1)
    return np.sqrt(params.sigma2 * np.cumsum(psi ** 2))


@dataclass(frozen=True)
class Coverage:
    cover80: float
    cover95: float
    per_step80: np.ndarray
    per_step95: np.ndarray
    trials: int


def empirical_coverage(
    order: ModelOrder,
    params: ParamVector,
    h: int,
    trials: int,
    seed: int,
    n_history: int = 120,
) -> Coverage:
    """Fraction of simulated future values inside the plug-in bands.

    Every trial simulates ``n_history + h`` levels, forecasts from the first
    ``n_history`` with the true parameters and checks the remaining ``h``.
    """
    if h < 1:
        raise HorizonZero("forecast horizon must be at least 1")
    children = np.random.SeedSequence(seed).spawn(trials)
    in80 = np.zeros(h)
    in95 = np.zeros(h)
    for child in children:
        path = simulate(order, params, n_history + h, int(child.generate_state(1)[0]))
        hist = TimeSeries(path.start, path.values[:n_history])
        fut = path.values[n_history:]
        fc = forecast_from_params(order, params, hist, h)
        in80 += (fc.lo80 <= fut) & (fut <= fc.hi80)
        in95 += (fc.lo95 <= fut) & (fut <= fc.hi95)
    return Coverage(float(in80.sum() / (trials * h)), float(in95.sum() / (trials * h)),
                    in80 / trials, in95 / trials, trials)
