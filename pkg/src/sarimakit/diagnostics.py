"""Residual diagnostics: ACF/PACF, ADF, portmanteau and KS normality tests."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np

from .errors import (
    CollinearRegressors,
    DataError,
    DegreesOfFreedomNonPositive,
    InsufficientData,
    LagTooLarge,
    SingularToeplitz,
    ZeroVariance,
)
from .estimation import FitResult
from .kernel import innovations
from .series import TimeSeries, difference

ALPHA = 0.05


@dataclass(frozen=True)
class TestOutcome:
    statistic: float
    p_value: float
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"statistic": self.statistic, "p_value": self.p_value, "detail": dict(self.detail)}


def _as_array(x) -> np.ndarray:
    return np.asarray(x.values if isinstance(x, TimeSeries) else x, dtype=float).reshape(-1)


# ---------------------------------------------------------------------------
# distribution tails
# ---------------------------------------------------------------------------

_EPS = 1e-15
_FPMIN = 1e-300


def gammainc_upper(a: float, x: float) -> float:
    """Regularized upper incomplete gamma ``Q(a, x)``.

    Series expansion below ``x < a + 1``, Lentz continued fraction above.
    """
    if a <= 0:
        raise DataError("shape parameter must be positive")
    if x <= 0:
        return 1.0
    lead = -x + a * math.log(x) - math.lgamma(a)
    if x < a + 1.0:
        ap, term = a, 1.0 / a
        total = term
        for _ in range(10000):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * _EPS:
                break
        return max(0.0, 1.0 - total * math.exp(lead))
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, 10000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return min(1.0, math.exp(lead) * h)


def chi2_sf(x: float, df: int) -> float:
    return gammainc_upper(df / 2.0, x / 2.0)


def kolmogorov_sf(lam: float) -> float:
    """``P(K > lam)`` for the limiting Kolmogorov distribution."""
    if lam <= 0:
        return 1.0
    if lam < 1.18:
        # theta-function form converges fast for small arguments
        y = -(math.pi ** 2) / (8.0 * lam * lam)
        cdf = math.sqrt(2.0 * math.pi) / lam * sum(math.exp(y * (2 * k - 1) ** 2) for k in range(1, 8))
        return min(1.0, max(0.0, 1.0 - cdf))
    total = 0.0
    for k in range(1, 101):
        term = math.exp(-2.0 * k * k * lam * lam)
        total += term if k % 2 else -term
        if term < 1e-17:
            break
    return min(1.0, max(0.0, 2.0 * total))


def normal_cdf(z):
    z = np.asarray(z, dtype=float)
    erf = np.vectorize(math.erf, otypes=[float])
    return 0.5 * (1.0 + erf(z / math.sqrt(2.0)))


# ---------------------------------------------------------------------------
# correlograms
# ---------------------------------------------------------------------------

def acf(series, max_lag: int) -> np.ndarray:
    """Sample autocorrelations r_0..r_max_lag with the biased denominator."""
    x = _as_array(series)
    if max_lag < 0 or x.size <= max_lag:
        raise LagTooLarge(f"max_lag={max_lag} needs more than {max_lag} observations, got {x.size}")
    xc = x - x.mean()
    denom = float(xc @ xc)
    if denom == 0.0:
        raise ZeroVariance("autocorrelation of a constant series is undefined")
    n = x.size
    return np.array([float(xc[:n - k] @ xc[k:]) / denom for k in range(max_lag + 1)])


def durbin_levinson(rho: np.ndarray) -> np.ndarray:
    """Partial autocorrelations from autocorrelations ``rho[0..K]`` (rho[0] = 1)."""
    K = rho.size - 1
    out = np.zeros(K)
    phi = np.zeros(0)
    v = 1.0
    for k in range(1, K + 1):
        if v <= 1e-14:
            raise SingularToeplitz(f"autocorrelation matrix is singular at lag {k}")
        num = rho[k] - float(phi @ rho[1:k][::-1]) if k > 1 else rho[1]
        a = num / v
        phi = np.r_[phi - a * phi[::-1], a]
        v *= 1.0 - a * a
        out[k - 1] = a
    return out


def pacf(series, max_lag: int) -> np.ndarray:
    """Partial autocorrelations at lags 1..max_lag."""
    x = _as_array(series)
    if x.size and np.ptp(x) == 0.0:
        raise SingularToeplitz("constant series has a singular autocorrelation matrix")
    return durbin_levinson(acf(x, max_lag))


# ---------------------------------------------------------------------------
# augmented Dickey-Fuller
# ---------------------------------------------------------------------------

@lru_cache(maxsize=1)
def _adf_table() -> dict:
    text = resources.files("sarimakit").joinpath("data/adf_critical_values.json").read_text()
    return json.loads(text)


def adf_pvalue(stat: float, n: int, regression: str) -> tuple[float, str]:
    """Interpolate the p-value; returns ``(p, flag)`` where flag marks clamping."""
    tab = _adf_table()
    sizes = np.array(tab["sample_sizes"], dtype=float)
    probs = np.array(tab["probabilities"])
    crit = np.array(tab["tables"][regression])
    at_n = np.array([np.interp(n, sizes, crit[:, j]) for j in range(probs.size)])
    p = float(np.interp(stat, at_n, probs))
    flag = ""
    if stat < at_n[0]:
        flag = "p-value smaller than printed p-value"
    elif stat > at_n[-1]:
        flag = "p-value greater than printed p-value"
    return p, flag


def adf_test(series, regression: str = "trend", lags: int | None = None) -> TestOutcome:
    """Augmented Dickey-Fuller test of a unit root.

    Regresses ``dx_t`` on ``x_{t-1}``, ``lags`` lagged differences and the
    deterministic terms of ``regression`` ("none", "drift" or "trend"). The
    default lag count is ``trunc((n - 1) ** (1/3))``.
    """
    if regression not in ("none", "drift", "trend"):
        raise DataError(f"unknown regression form {regression!r}")
    x = _as_array(series)
    if lags is None:
        lags = int(math.trunc((x.size - 1) ** (1.0 / 3.0))) if x.size > 1 else 0
    if lags < 0 or x.size <= lags + 10:
        raise InsufficientData(f"ADF with {lags} lags needs more than {lags + 10} observations, got {x.size}")
    dx = np.diff(x)
    n = dx.size
    K = lags + 1
    rows = np.arange(K - 1, n)
    y = dx[rows]
    cols = [x[rows]]
    names = ["lag_level"]
    if regression in ("drift", "trend"):
        cols.append(np.ones(rows.size))
        names.append("const")
    if regression == "trend":
        cols.append(rows + 1.0)
        names.append("trend")
    for i in range(1, K):
        cols.append(dx[rows - i])
        names.append(f"dlag{i}")
    X = np.column_stack(cols)
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise CollinearRegressors("ADF regressors are collinear (constant series?)")
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    dof = rows.size - X.shape[1]
    if dof <= 0:
        raise InsufficientData("no residual degrees of freedom in the ADF regression")
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(X.T @ X)
    stat = float(beta[0] / math.sqrt(cov[0, 0]))
    p, flag = adf_pvalue(stat, n, regression)
    return TestOutcome(stat, p, {"regression": regression, "lags": lags, "nobs": int(rows.size), "flag": flag})


# ---------------------------------------------------------------------------
# portmanteau tests
# ---------------------------------------------------------------------------

def _check_portmanteau(n: int, h: int, fitdf: int) -> None:
    if h - fitdf <= 0:
        raise DegreesOfFreedomNonPositive(f"h={h} must exceed fitdf={fitdf}")
    if n <= h:
        raise LagTooLarge(f"need more than h={h} residuals, got {n}")


def portmanteau_from_acf(r: np.ndarray, n: int, h: int, fitdf: int = 0, kind: str = "box-pierce") -> TestOutcome:
    """Portmanteau statistic from autocorrelations ``r[0..h]`` of ``n`` values."""
    _check_portmanteau(n, h, fitdf)
    rk = np.asarray(r, dtype=float)[1:h + 1]
    if kind == "box-pierce":
        stat = n * float(np.sum(rk ** 2))
    elif kind == "ljung-box":
        k = np.arange(1, h + 1)
        stat = n * (n + 2) * float(np.sum(rk ** 2 / (n - k)))
    else:
        raise DataError(f"unknown portmanteau kind {kind!r}")
    df = h - fitdf
    return TestOutcome(stat, chi2_sf(stat, df), {"test": kind, "lags": h, "fitdf": fitdf, "df": df})


def box_pierce(residuals, h: int = 24, fitdf: int = 0) -> TestOutcome:
    x = _as_array(residuals)
    _check_portmanteau(x.size, h, fitdf)
    return portmanteau_from_acf(acf(x, h), x.size, h, fitdf, "box-pierce")


def ljung_box(residuals, h: int = 24, fitdf: int = 0) -> TestOutcome:
    x = _as_array(residuals)
    _check_portmanteau(x.size, h, fitdf)
    return portmanteau_from_acf(acf(x, h), x.size, h, fitdf, "ljung-box")


# ---------------------------------------------------------------------------
# normality
# ---------------------------------------------------------------------------

def ks_normality(residuals) -> TestOutcome:
    """Kolmogorov-Smirnov distance to a normal with the sample mean and SD.

    The p-value is the plain asymptotic Kolmogorov tail with Stephens'
    small-sample correction, without a Lilliefors adjustment for the estimated
    parameters.
    """
    x = np.sort(_as_array(residuals))
    n = x.size
    if n < 8:
        raise InsufficientData(f"KS test needs at least 8 values, got {n}")
    mu = float(x.mean())
    sd = float(x.std(ddof=1))
    if sd == 0.0:
        raise ZeroVariance("KS test on a constant sample")
    F = normal_cdf((x - mu) / sd)
    i = np.arange(1, n + 1)
    D = float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))
    sn = math.sqrt(n)
    lam = (sn + 0.12 + 0.11 / sn) * D
    return TestOutcome(D, kolmogorov_sf(lam), {"n": n, "mean": mu, "sd": sd})


# ---------------------------------------------------------------------------
# bundled report
# ---------------------------------------------------------------------------

@dataclass
class ResidualReport:
    order: str
    n: int
    mean: float
    adf: TestOutcome
    box_pierce: TestOutcome
    ljung_box: TestOutcome
    ks: TestOutcome
    alpha: float = ALPHA

    @property
    def zero_mean_ok(self) -> bool:
        # stationary residuals (unit root rejected) carry no systematic drift
        return self.adf.p_value < self.alpha

    @property
    def no_autocorrelation_ok(self) -> bool:
        return self.box_pierce.p_value > self.alpha

    @property
    def normality_ok(self) -> bool:
        return self.ks.p_value > self.alpha

    @property
    def all_ok(self) -> bool:
        return self.zero_mean_ok and self.no_autocorrelation_ok and self.normality_ok

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "n": self.n,
            "alpha": self.alpha,
            "residual_mean": self.mean,
            "adf": self.adf.to_dict(),
            "box_pierce": self.box_pierce.to_dict(),
            "ljung_box": self.ljung_box.to_dict(),
            "ks_normality": self.ks.to_dict(),
            "checks": {
                "zero_mean": self.zero_mean_ok,
                "no_autocorrelation": self.no_autocorrelation_ok,
                "normality": self.normality_ok,
            },
        }

    def table(self) -> str:
        lines = [
            f"Residual diagnostics for {self.order} (n={self.n}, alpha={self.alpha})",
            f"  residual mean: {self.mean:.6g}",
            f"  1. Zero mean (ADF):            statistic = {self.adf.statistic:.4f}, p-value = {self.adf.p_value:.4g}"
            f"  [{'pass' if self.zero_mean_ok else 'FAIL'}]",
            f"  2. Autocorrelation (Box-Pierce): chi2 = {self.box_pierce.statistic:.3f}, p-value = {self.box_pierce.p_value:.4g}"
            f"  [{'pass' if self.no_autocorrelation_ok else 'FAIL'}]",
            f"     (Ljung-Box: chi2 = {self.ljung_box.statistic:.3f}, p-value = {self.ljung_box.p_value:.4g})",
            f"  3. Normality (KS):              D = {self.ks.statistic:.6f}, p-value = {self.ks.p_value:.4g}"
            f"  [{'pass' if self.normality_ok else 'FAIL'}]",
        ]
        return "\n".join(lines)


def residuals_of(fit: FitResult, training: TimeSeries) -> np.ndarray:
    o = fit.order
    w = difference(training, o.d, o.D, o.s)
    v, _ = innovations(o, fit.params, w)
    return v


def residual_report(
    fit: FitResult,
    training: TimeSeries,
    h: int = 24,
    fitdf: int | None = None,
    adf_regression: str = "trend",
    alpha: float = ALPHA,
) -> ResidualReport:
    """Run the three residual-assumption checks on one-step residuals."""
    o = fit.order
    if len(training) <= o.n_diff:
        raise InsufficientData("no residuals: training series is shorter than the differencing span")
    resid = residuals_of(fit, training)
    if fitdf is None:
        fitdf = o.n_coef
    if resid.size <= h:
        raise InsufficientData(f"{resid.size} residuals are too few for {h} portmanteau lags")
    return ResidualReport(
        order=str(o),
        n=int(resid.size),
        mean=float(resid.mean()),
        adf=adf_test(resid, adf_regression),
        box_pierce=box_pierce(resid, h, fitdf),
        ljung_box=ljung_box(resid, h, fitdf),
        ks=ks_normality(resid),
        alpha=alpha,
    )
