"""SARIMA model structure and exact Gaussian likelihood.

The differenced series is treated as an ARMA(p + s*P, q + s*Q) process with
multiplicative lag polynomials, written in Harvey's state-space form::

    alpha_t = T alpha_{t-1} + R eps_t,     x_t = alpha_{1,t}

where the first column of ``T`` holds the expanded AR coefficients, ``T`` has
ones on the superdiagonal and ``R = (1, theta_1, ..., theta_{r-1})``. The
initial state covariance is the stationary solution of ``P = T P T' + R R'``.

Sign conventions: AR polynomial ``1 - sum phi_k B^k``, MA polynomial
``1 + sum theta_k B^k``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np

from .errors import DataError, NonStationaryParams, NumericalFailure, ShapeMismatch
from .series import MonthStamp, TimeSeries, integrate_values

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class ModelOrder:
    p: int = 0
    d: int = 0
    q: int = 0
    P: int = 0
    D: int = 0
    Q: int = 0
    s: int = 12

    def __post_init__(self):
        if min(self.p, self.d, self.q, self.P, self.D, self.Q) < 0:
            raise DataError(f"model orders must be non-negative: {self.as_tuple()}")
        if self.s < 1:
            raise DataError(f"seasonal period must be >= 1, got {self.s}")

    @classmethod
    def parse(cls, text: str, s: int = 12) -> "ModelOrder":
        """Parse ``"p,d,q,P,D,Q"`` or ``"p,d,q,P,D,Q,s"``."""
        parts = [int(x) for x in re.split(r"[,\s]+", text.strip().strip("()")) if x]
        if len(parts) == 6:
            parts.append(s)
        if len(parts) != 7:
            raise DataError(f"expected p,d,q,P,D,Q[,s], got {text!r}")
        return cls(*parts)

    def as_tuple(self) -> tuple[int, int, int, int, int, int]:
        return (self.p, self.d, self.q, self.P, self.D, self.Q)

    @property
    def n_coef(self) -> int:
        return self.p + self.q + self.P + self.Q

    @property
    def n_diff(self) -> int:
        """Observations consumed by differencing."""
        return self.d + self.D * self.s

    @property
    def ar_degree(self) -> int:
        return self.p + self.s * self.P

    @property
    def ma_degree(self) -> int:
        return self.q + self.s * self.Q

    @property
    def state_dim(self) -> int:
        return max(self.ar_degree, self.ma_degree + 1)

    def coef_names(self) -> list[str]:
        return (
            [f"ar{i}" for i in range(1, self.p + 1)]
            + [f"ma{i}" for i in range(1, self.q + 1)]
            + [f"sar{i}" for i in range(1, self.P + 1)]
            + [f"sma{i}" for i in range(1, self.Q + 1)]
        )

    def to_dict(self) -> dict:
        return {"p": self.p, "d": self.d, "q": self.q, "P": self.P, "D": self.D, "Q": self.Q, "s": self.s}

    def __str__(self) -> str:
        return f"SARIMA({self.p},{self.d},{self.q})({self.P},{self.D},{self.Q})[{self.s}]"


def _floats(xs) -> tuple[float, ...]:
    return tuple(float(x) for x in np.asarray(xs, dtype=float).reshape(-1))


@dataclass(frozen=True)
class ParamVector:
    ar: tuple[float, ...] = ()
    ma: tuple[float, ...] = ()
    sar: tuple[float, ...] = ()
    sma: tuple[float, ...] = ()
    sigma2: float = 1.0

    def __post_init__(self):
        for name in ("ar", "ma", "sar", "sma"):
            object.__setattr__(self, name, _floats(getattr(self, name)))
        object.__setattr__(self, "sigma2", float(self.sigma2))
        if not self.sigma2 >= 0 or not math.isfinite(self.sigma2):
            raise DataError(f"sigma2 must be a finite non-negative number, got {self.sigma2}")

    def check(self, order: ModelOrder) -> None:
        got = (len(self.ar), len(self.ma), len(self.sar), len(self.sma))
        want = (order.p, order.q, order.P, order.Q)
        if got != want:
            raise ShapeMismatch(f"parameter lengths {got} do not match orders (p,q,P,Q)={want}")

    def coefficients(self) -> np.ndarray:
        """Coefficients in the order ar, ma, sar, sma."""
        return np.array(self.ar + self.ma + self.sar + self.sma, dtype=float)

    @classmethod
    def from_coefficients(cls, order: ModelOrder, coefs, sigma2: float = 1.0) -> "ParamVector":
        c = np.asarray(coefs, dtype=float).reshape(-1)
        if c.size != order.n_coef:
            raise ShapeMismatch(f"expected {order.n_coef} coefficients, got {c.size}")
        i = np.cumsum([0, order.p, order.q, order.P, order.Q])
        return cls(c[i[0]:i[1]], c[i[1]:i[2]], c[i[2]:i[3]], c[i[3]:i[4]], sigma2)

    def to_dict(self) -> dict:
        return {"ar": list(self.ar), "ma": list(self.ma), "sar": list(self.sar),
                "sma": list(self.sma), "sigma2": self.sigma2}

    @classmethod
    def from_dict(cls, d: dict) -> "ParamVector":
        return cls(d.get("ar", ()), d.get("ma", ()), d.get("sar", ()), d.get("sma", ()), d.get("sigma2", 1.0))


@dataclass(frozen=True)
class ExpandedArma:
    ar_full: np.ndarray
    ma_full: np.ndarray

    @property
    def ar_poly(self) -> np.ndarray:
        return np.r_[1.0, -self.ar_full]

    @property
    def ma_poly(self) -> np.ndarray:
        return np.r_[1.0, self.ma_full]


@dataclass(frozen=True)
class StateSpace:
    r: int
    transition: np.ndarray
    selection: np.ndarray
    observation: np.ndarray
    state_cov_init: np.ndarray = field(repr=False)


def _seasonal_poly(coefs: Sequence[float], s: int, sign: float) -> np.ndarray:
    poly = np.zeros(len(coefs) * s + 1)
    poly[0] = 1.0
    for j, c in enumerate(coefs, start=1):
        poly[j * s] = sign * c
    return poly


def expand(order: ModelOrder, params: ParamVector) -> ExpandedArma:
    """Multiply out the non-seasonal and seasonal lag polynomials."""
    params.check(order)
    ar_poly = np.convolve(np.r_[1.0, -np.asarray(params.ar)], _seasonal_poly(params.sar, order.s, -1.0))
    ma_poly = np.convolve(np.r_[1.0, np.asarray(params.ma)], _seasonal_poly(params.sma, order.s, 1.0))
    return ExpandedArma(ar_full=-ar_poly[1:], ma_full=ma_poly[1:])


def _block_is_stationary(coefs: Sequence[float]) -> bool:
    if len(coefs) == 0:
        return True
    roots = np.roots(np.r_[1.0, -np.asarray(coefs, dtype=float)][::-1])
    return bool(np.all(np.abs(roots) > 1.0))


def is_stationary(order: ModelOrder, params: ParamVector) -> bool:
    """True when both AR blocks have all roots strictly outside the unit circle."""
    params.check(order)
    return _block_is_stationary(params.ar) and _block_is_stationary(params.sar)


def is_invertible(order: ModelOrder, params: ParamVector) -> bool:
    params.check(order)
    return _block_is_stationary(-np.asarray(params.ma)) and _block_is_stationary(-np.asarray(params.sma))


def _require_stationary(order: ModelOrder, params: ParamVector) -> None:
    if not is_stationary(order, params):
        raise NonStationaryParams(f"AR polynomial of {order} has a root on or inside the unit circle")


# ---------------------------------------------------------------------------
# numba kernels; hand-written loops keep results bit-identical across processes
# ---------------------------------------------------------------------------

@numba.njit(cache=True, nogil=True)
def _matmul(A, B):
    n, k = A.shape
    m = B.shape[1]
    out = np.zeros((n, m))
    for i in range(n):
        for l in range(k):
            a = A[i, l]
            if a != 0.0:
                for j in range(m):
                    out[i, j] += a * B[l, j]
    return out


@numba.njit(cache=True, nogil=True)
def _lyapunov_doubling(T, Q, max_iter):
    """Solve P = T P T' + Q by Smith's doubling; returns (P, converged)."""
    A = T.copy()
    P = Q.copy()
    for _ in range(max_iter):
        AP = _matmul(A, P)
        inc = _matmul(AP, A.T)
        big = 0.0
        top = 0.0
        for i in range(P.shape[0]):
            for j in range(P.shape[1]):
                P[i, j] += inc[i, j]
                if abs(inc[i, j]) > big:
                    big = abs(inc[i, j])
                if abs(P[i, j]) > top:
                    top = abs(P[i, j])
        if big <= 1e-17 * top:
            return P, True
        A = _matmul(A, A)
    return P, False


@numba.njit(cache=True, nogil=True)
def _kalman_arma(y, phi, theta, P0):
    """Kalman filter for a unit-variance ARMA in Harvey form.

    ``phi`` and ``theta`` are padded to the state dimension ``r`` (``theta[0]``
    is 1). Returns innovations, their unit-scale variances, the predicted state
    mean/covariance for the step after the sample, and a status flag.
    """
    r = phi.shape[0]
    n = y.shape[0]
    a = np.zeros(r)
    P = P0.copy()
    v = np.empty(n)
    F = np.empty(n)
    N = np.empty((r, r))
    status = 0
    for t in range(n):
        Ft = P[0, 0]
        if not (Ft > 0.5) or not np.isfinite(Ft):
            status = 1
            break
        vt = y[t] - a[0]
        v[t] = vt
        F[t] = Ft
        # update
        k0 = vt / Ft
        au = np.empty(r)
        row0 = P[0, :].copy()
        for i in range(r):
            au[i] = a[i] + row0[i] * k0
        for i in range(r):
            pi0 = row0[i] / Ft
            for j in range(r):
                P[i, j] -= pi0 * row0[j]
        # predict: a <- T au
        for i in range(r - 1):
            a[i] = phi[i] * au[0] + au[i + 1]
        a[r - 1] = phi[r - 1] * au[0]
        # N = T P
        for j in range(r):
            p0j = P[0, j]
            for i in range(r - 1):
                N[i, j] = phi[i] * p0j + P[i + 1, j]
            N[r - 1, j] = phi[r - 1] * p0j
        # P = N T' + R R'
        for i in range(r):
            ni0 = N[i, 0]
            for j in range(r - 1):
                P[i, j] = phi[j] * ni0 + N[i, j + 1] + theta[i] * theta[j]
            P[i, r - 1] = phi[r - 1] * ni0 + theta[i] * theta[r - 1]
    return v, F, a, P, status


@numba.njit(cache=True, nogil=True)
def _simulate_arma(phi, theta, alpha0, eps):
    r = phi.shape[0]
    n = eps.shape[0]
    a = alpha0.copy()
    out = np.empty(n)
    for t in range(n):
        a0 = a[0]
        for i in range(r - 1):
            a[i] = phi[i] * a0 + a[i + 1] + theta[i] * eps[t]
        a[r - 1] = phi[r - 1] * a0 + theta[r - 1] * eps[t]
        out[t] = a[0]
    return out


def _padded(order: ModelOrder, exp: ExpandedArma) -> tuple[np.ndarray, np.ndarray]:
    r = order.state_dim
    phi = np.zeros(r)
    phi[:exp.ar_full.size] = exp.ar_full
    theta = np.zeros(r)
    theta[0] = 1.0
    theta[1:1 + exp.ma_full.size] = exp.ma_full
    return phi, theta


def solve_lyapunov(T: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Stationary covariance ``P = T P T' + Q`` for a stable transition ``T``."""
    P, ok = _lyapunov_doubling(np.ascontiguousarray(T, dtype=float), np.ascontiguousarray(Q, dtype=float), 200)
    if not ok or not np.all(np.isfinite(P)):
        raise NonStationaryParams("stationary state covariance does not exist")
    return P


def _unit_state_space(order: ModelOrder, params: ParamVector):
    _require_stationary(order, params)
    phi, theta = _padded(order, expand(order, params))
    r = phi.size
    T = np.zeros((r, r))
    T[:, 0] = phi
    T[np.arange(r - 1), np.arange(1, r)] = 1.0
    P0 = solve_lyapunov(T, np.outer(theta, theta))
    return phi, theta, T, P0


def state_space(order: ModelOrder, params: ParamVector) -> StateSpace:
    """Harvey-form representation; ``state_cov_init`` is scaled by ``sigma2``."""
    phi, theta, T, P0 = _unit_state_space(order, params)
    Z = np.zeros(phi.size)
    Z[0] = 1.0
    return StateSpace(phi.size, T, theta, Z, params.sigma2 * P0)


@dataclass(frozen=True)
class FilterOutput:
    """Unit-scale Kalman output; multiply variances by sigma2 for real units."""

    v: np.ndarray
    F: np.ndarray
    a_next: np.ndarray
    P_next: np.ndarray
    phi: np.ndarray
    theta: np.ndarray


def kalman_filter(order: ModelOrder, params: ParamVector, diffed) -> FilterOutput:
    y = np.ascontiguousarray(diffed.values if isinstance(diffed, TimeSeries) else diffed, dtype=float)
    phi, theta, _, P0 = _unit_state_space(order, params)
    v, F, a, P, status = _kalman_arma(y, phi, theta, P0)
    if status:
        raise NumericalFailure("prediction-error variance lost positivity during filtering")
    return FilterOutput(v, F, a, P, phi, theta)


def loglik(order: ModelOrder, params: ParamVector, diffed_series) -> float:
    """Exact Gaussian log-likelihood of the differenced series."""
    if params.sigma2 <= 0:
        raise DataError("sigma2 must be positive for the likelihood")
    out = kalman_filter(order, params, diffed_series)
    var = params.sigma2 * out.F
    return float(-0.5 * np.sum(LOG_2PI + np.log(var) + out.v ** 2 / var))


def profile_loglik(order: ModelOrder, params: ParamVector, diffed_series) -> tuple[float, float]:
    """Log-likelihood with sigma2 concentrated out; returns ``(loglik, sigma2_hat)``."""
    out = kalman_filter(order, params, diffed_series)
    n = out.v.size
    sigma2 = float(np.mean(out.v ** 2 / out.F))
    if not sigma2 > 0:
        return -math.inf, 0.0
    ll = -0.5 * (n * (LOG_2PI + 1.0 + math.log(sigma2)) + float(np.sum(np.log(out.F))))
    return ll, sigma2


def innovations(order: ModelOrder, params: ParamVector, diffed_series) -> tuple[np.ndarray, np.ndarray]:
    """One-step prediction errors and their variances (in data units)."""
    out = kalman_filter(order, params, diffed_series)
    return out.v.copy(), params.sigma2 * out.F


def _psi_from_polys(ar_coefs, ma_coefs, horizon: int) -> np.ndarray:
    """psi_1..psi_h of ``(1 + sum ma B^k) / (1 - sum ar B^k)``."""
    ar = np.asarray(ar_coefs, dtype=float)
    ma = np.asarray(ma_coefs, dtype=float)
    psi = np.zeros(horizon + 1)
    psi[0] = 1.0
    for j in range(1, horizon + 1):
        acc = ma[j - 1] if j <= ma.size else 0.0
        for i in range(1, min(j, ar.size) + 1):
            acc += ar[i - 1] * psi[j - i]
        psi[j] = acc
    return psi[1:]


def psi_weights(order: ModelOrder, params: ParamVector, horizon: int) -> np.ndarray:
    """MA(infinity) weights psi_1..psi_horizon of the differenced process."""
    _require_stationary(order, params)
    exp = expand(order, params)
    return _psi_from_polys(exp.ar_full, exp.ma_full, horizon)


def simulate(
    order: ModelOrder,
    params: ParamVector,
    n: int,
    seed: int,
    burn_in: int = 0,
    start: MonthStamp = MonthStamp(2000, 1),
) -> TimeSeries:
    """Draw ``n`` levels from the SARIMA process.

    The differenced ARMA part starts from its stationary distribution, so
    ``burn_in`` is optional. Integration uses zero initial levels which are
    not part of the returned series.
    """
    if n < 1:
        raise DataError("n must be at least 1")
    phi, theta, _, P0 = _unit_state_space(order, params)
    rng = np.random.default_rng(seed)
    sd = math.sqrt(params.sigma2)
    w, U = np.linalg.eigh(P0)
    alpha0 = U @ (np.sqrt(np.clip(w, 0.0, None)) * rng.standard_normal(phi.size)) * sd
    eps = rng.standard_normal(n + burn_in) * sd
    x = _simulate_arma(phi, theta, alpha0, eps)[burn_in:]
    m = order.n_diff
    if m:
        x = integrate_values(x, order.d, order.D, order.s, np.zeros(m))[m:]
    return TimeSeries(start, x)
