"""Maximum likelihood estimation of SARIMA coefficients."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateSampleSize,
    InsufficientData,
    NonFiniteLikelihood,
    NonStationaryParams,
    NumericalError,
)
from .kernel import ModelOrder, ParamVector, is_stationary, profile_loglik
from .optimize import ar_to_pacf, nelder_mead, pacf_to_ar
from .series import TimeSeries, difference

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FitConfig:
    tol: float = 1e-8
    xtol: float = 1e-4
    max_iter: int = 2000
    initial_step: float = 0.1
    hessian_step: float = 1e-4
    min_obs_per_param: int = 10
    compute_stderr: bool = True


@dataclass
class FitResult:
    order: ModelOrder
    params: ParamVector
    stderr: np.ndarray
    loglik: float
    aic: float
    aicc: float
    bic: float
    sigma2: float
    n_effective: int
    converged: bool
    iterations: int

    @property
    def k(self) -> int:
        return self.order.n_coef + 1

    def to_dict(self) -> dict:
        return {
            "order": self.order.to_dict(),
            "params": self.params.to_dict(),
            "stderr": [None if not math.isfinite(x) else float(x) for x in self.stderr],
            "loglik": self.loglik,
            "aic": self.aic,
            "aicc": self.aicc,
            "bic": self.bic,
            "sigma2": self.sigma2,
            "n_effective": self.n_effective,
            "converged": self.converged,
            "iterations": self.iterations,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "FitResult":
        return cls(
            order=ModelOrder(**d["order"]),
            params=ParamVector.from_dict(d["params"]),
            stderr=np.array([math.nan if x is None else x for x in d["stderr"]], dtype=float),
            loglik=d["loglik"],
            aic=d["aic"],
            aicc=d["aicc"],
            bic=d["bic"],
            sigma2=d["sigma2"],
            n_effective=d["n_effective"],
            converged=d["converged"],
            iterations=d["iterations"],
        )


def information_criteria(loglik: float, k: int, n: int) -> tuple[float, float, float]:
    """AIC, AICc and BIC for ``k`` estimated parameters and ``n`` observations."""
    if n <= k + 1:
        raise DegenerateSampleSize(f"AICc undefined for n={n}, k={k}")
    aic = -2.0 * loglik + 2.0 * k
    aicc = aic + 2.0 * k * (k + 1) / (n - k - 1)
    bic = -2.0 * loglik + k * math.log(n)
    return aic, aicc, bic


class _Packer:
    """Maps the optimizer's free vector to ParamVector and back.

    AR blocks live in partial-autocorrelation space, MA blocks are raw.
    """

    def __init__(self, order: ModelOrder):
        self.order = order
        self.cuts = np.cumsum([0, order.p, order.q, order.P, order.Q])

    def unpack(self, x: np.ndarray, sigma2: float = 1.0) -> ParamVector:
        c = self.cuts
        return ParamVector(
            pacf_to_ar(x[c[0]:c[1]]), x[c[1]:c[2]], pacf_to_ar(x[c[2]:c[3]]), x[c[3]:c[4]], sigma2
        )

    def pack(self, params: ParamVector) -> np.ndarray:
        return np.r_[ar_to_pacf(params.ar), params.ma, ar_to_pacf(params.sar), params.sma]


def _shrink_to_stationary(coefs: np.ndarray) -> np.ndarray:
    c = np.asarray(coefs, dtype=float)
    lags = np.arange(1, c.size + 1)
    for _ in range(200):
        if _ar_ok(c):
            return c
        c = c * 0.9 ** lags
    return np.zeros_like(c)


def _ar_ok(c) -> bool:
    if c.size == 0:
        return True
    try:
        ar_to_pacf(c)
    except ValueError:
        return False
    return True


def _lagmat(x: np.ndarray, lags, start: int) -> np.ndarray:
    return np.column_stack([x[start - L:x.size - L] for L in lags]) if lags else np.empty((x.size - start, 0))


def hannan_rissanen_start(order: ModelOrder, w: np.ndarray) -> ParamVector | None:
    """Two-stage regression start: long AR for residuals, then OLS on lags.

    The seasonal terms enter additively (cross-products are ignored), which is
    adequate for a starting point. Returns None when the series is too short.
    """
    n = w.size
    s = order.s
    ar_lags = list(range(1, order.p + 1)) + [j * s for j in range(1, order.P + 1)]
    ma_lags = list(range(1, order.q + 1)) + [j * s for j in range(1, order.Q + 1)]
    if not ar_lags and not ma_lags:
        return None
    resid = np.zeros(n)
    L = 0
    if ma_lags:
        L = min(max(10, order.ar_degree + 1, 2 * order.ma_degree), n // 3)
        if L < 1 or n - L < 2 * L:
            return None
        X = _lagmat(w, list(range(1, L + 1)), L)
        beta = np.linalg.lstsq(X, w[L:], rcond=None)[0]
        resid[L:] = w[L:] - X @ beta
    lag_set = sorted(set(ar_lags))
    ma_set = sorted(set(ma_lags))
    start = L + max(lag_set + ma_set)
    if n - start < 2 * (len(lag_set) + len(ma_set)) + 5:
        return None
    X = np.hstack([_lagmat(w, lag_set, start), _lagmat(resid, ma_set, start)])
    beta = np.linalg.lstsq(X, w[start:], rcond=None)[0]
    ar_coef = dict(zip(lag_set, beta[:len(lag_set)]))
    ma_coef = dict(zip(ma_set, beta[len(lag_set):]))
    ar = np.array([ar_coef[i] for i in range(1, order.p + 1)])
    sar = np.array([ar_coef[j * s] for j in range(1, order.P + 1)])
    ma = np.array([ma_coef[i] for i in range(1, order.q + 1)])
    sma = np.array([ma_coef[j * s] for j in range(1, order.Q + 1)])
    ar, sar = _shrink_to_stationary(ar), _shrink_to_stationary(sar)
    # keep the MA start invertible; the optimizer may still leave the region
    ma, sma = -_shrink_to_stationary(-ma), -_shrink_to_stationary(-sma)
    return ParamVector(ar, ma, sar, sma, 1.0)


def _negloglik_fn(order: ModelOrder, w: np.ndarray, packer: _Packer):
    def negll(x):
        ll, _ = profile_loglik(order, packer.unpack(x), w)
        return -ll
    return negll


def _profile_raw(order: ModelOrder, w: np.ndarray):
    def f(c):
        params = ParamVector.from_coefficients(order, c)
        if not is_stationary(order, params):
            raise NonStationaryParams("perturbation left the stationary region")
        return -profile_loglik(order, params, w)[0]
    return f


def numerical_hessian(f, x: np.ndarray, rel_step: float = 1e-4) -> np.ndarray:
    """Central-difference Hessian with steps ``rel_step * max(|x_i|, 1)``."""
    x = np.asarray(x, dtype=float)
    k = x.size
    h = rel_step * np.maximum(np.abs(x), 1.0)
    H = np.empty((k, k))
    f0 = f(x)
    E = np.diag(h)
    for i in range(k):
        H[i, i] = (f(x + E[i]) - 2.0 * f0 + f(x - E[i])) / h[i] ** 2
        for j in range(i):
            val = (
                f(x + E[i] + E[j]) - f(x + E[i] - E[j]) - f(x - E[i] + E[j]) + f(x - E[i] - E[j])
            ) / (4.0 * h[i] * h[j])
            H[i, j] = H[j, i] = val
    return H


def standard_errors(order: ModelOrder, params: ParamVector, training: TimeSeries, rel_step: float = 1e-4) -> np.ndarray:
    """Square roots of the inverse Hessian diagonal of the profile -loglik.

    sigma2 is concentrated out, so the vector has one entry per coefficient
    (ar, ma, sar, sma). Entries that cannot be computed are NaN.
    """
    k = order.n_coef
    if k == 0:
        return np.zeros(0)
    w = difference(training, order.d, order.D, order.s).values
    try:
        H = numerical_hessian(_profile_raw(order, w), params.coefficients(), rel_step)
    except NumericalError:
        return np.full(k, math.nan)
    if not np.all(np.isfinite(H)):
        return np.full(k, math.nan)
    try:
        cov = np.linalg.inv(H)
    except np.linalg.LinAlgError:
        return np.full(k, math.nan)
    diag = np.diag(cov)
    out = np.full(k, math.nan)
    ok = np.isfinite(diag) & (diag > 0)
    out[ok] = np.sqrt(diag[ok])
    return out


def fit(order: ModelOrder, training: TimeSeries, config: FitConfig = FitConfig()) -> FitResult:
    """Fit ``order`` to ``training`` by exact maximum likelihood.

    Two deterministic starts are tried (all zeros and a Hannan-Rissanen
    regression); each runs the simplex and then one restart from its own
    optimum. The start with the higher final likelihood wins.
    """
    if len(training) <= order.n_diff:
        raise InsufficientData(f"{len(training)} observations cannot be differenced for {order}")
    w = difference(training, order.d, order.D, order.s).values
    n = w.size
    k = order.n_coef + 1
    if n < config.min_obs_per_param * k:
        raise InsufficientData(
            f"{order} needs at least {config.min_obs_per_param * k} differenced observations, got {n}"
        )

    packer = _Packer(order)
    negll = _negloglik_fn(order, w, packer)
    starts = [np.zeros(order.n_coef)]
    hr = hannan_rissanen_start(order, w)
    if hr is not None:
        starts.append(packer.pack(hr))

    best = None
    total_iter = 0
    for x0 in starts:
        if not math.isfinite(_safe(negll, x0)):
            continue
        res = nelder_mead(negll, x0, step=config.initial_step, ftol=config.tol,
                          xtol=config.xtol, max_iter=config.max_iter)
        total_iter += res.iterations
        if math.isfinite(res.fun):
            again = nelder_mead(negll, res.x, step=config.initial_step / 10, ftol=config.tol,
                                xtol=config.xtol, max_iter=config.max_iter)
            total_iter += again.iterations
            if again.fun <= res.fun:
                res = type(res)(again.x, again.fun, res.iterations + again.iterations,
                                res.evaluations + again.evaluations, again.converged)
        if best is None or res.fun < best.fun:
            best = res
    if best is None or not math.isfinite(best.fun):
        raise NonFiniteLikelihood(f"no starting point for {order} produced a finite likelihood")
    if not best.converged:
        log.warning("%s: simplex stopped after %d iterations without converging", order, best.iterations)

    ll, sigma2 = profile_loglik(order, packer.unpack(best.x), w)
    params = packer.unpack(best.x, sigma2)
    aic, aicc, bic = information_criteria(ll, k, n)
    if config.compute_stderr:
        se = standard_errors(order, params, training, config.hessian_step)
    else:
        se = np.full(order.n_coef, math.nan)
    return FitResult(order, params, se, ll, aic, aicc, bic, sigma2, n, bool(best.converged), total_iter)


def _safe(f, x) -> float:
    try:
        return float(f(x))
    except (ArithmeticError, ValueError):
        return math.inf
