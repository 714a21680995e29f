"""Derivative-free simplex minimizer and the AR stationarity transform."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    iterations: int
    evaluations: int
    converged: bool


def nelder_mead(
    func: Callable[[np.ndarray], float],
    x0,
    *,
    step=0.1,
    ftol: float = 1e-8,
    xtol: float = 1e-4,
    max_iter: int = 2000,
) -> SimplexResult:
    """Minimize ``func`` with the Nelder-Mead simplex.

    Uses the dimension-adaptive coefficients of Gao & Han (2012), which behave
    better than the classic (1, 2, 0.5, 0.5) set beyond a handful of
    dimensions. Non-finite function values are treated as +inf, so the simplex
    simply retreats from infeasible regions.

    Convergence requires both the spread of function values to fall below
    ``ftol * max(1, |f_best|)`` and every vertex to lie within ``xtol`` of the
    best one (sup norm).
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    n = x0.size
    nfev = 0

    def f(x):
        nonlocal nfev
        nfev += 1
        try:
            val = float(func(x))
        except (ArithmeticError, ValueError):
            return math.inf
        return val if math.isfinite(val) else math.inf

    if n == 0:
        return SimplexResult(x0, f(x0), 0, nfev, True)

    alpha, gamma = 1.0, 1.0 + 2.0 / n
    rho, sigma = 0.75 - 1.0 / (2.0 * n), 1.0 - 1.0 / n
    if n == 1:
        gamma, rho, sigma = 2.0, 0.5, 0.5

    steps = np.broadcast_to(np.asarray(step, dtype=float), (n,))
    sim = np.empty((n + 1, n))
    sim[0] = x0
    for i in range(n):
        sim[i + 1] = x0
        sim[i + 1, i] += steps[i]
    fs = np.array([f(v) for v in sim])

    converged = False
    it = 0
    while it < max_iter:
        order = np.argsort(fs, kind="stable")
        sim, fs = sim[order], fs[order]
        if math.isfinite(fs[-1]):
            fspread = fs[-1] - fs[0]
            xspread = np.max(np.abs(sim[1:] - sim[0]))
            if fspread <= ftol * max(1.0, abs(fs[0])) and xspread <= xtol:
                converged = True
                break
        it += 1

        centroid = sim[:-1].mean(axis=0)
        xr = centroid + alpha * (centroid - sim[-1])
        fr = f(xr)
        if fr < fs[0]:
            xe = centroid + gamma * (xr - centroid)
            fe = f(xe)
            if fe < fr:
                sim[-1], fs[-1] = xe, fe
            else:
                sim[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-2]:
            sim[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-1]:
            xc = centroid + rho * (xr - centroid)
            fc = f(xc)
            if fc <= fr:
                sim[-1], fs[-1] = xc, fc
                continue
        else:
            xc = centroid + rho * (sim[-1] - centroid)
            fc = f(xc)
            if fc < fs[-1]:
                sim[-1], fs[-1] = xc, fc
                continue
        # shrink toward the best vertex
        for i in range(1, n + 1):
            sim[i] = sim[0] + sigma * (sim[i] - sim[0])
            fs[i] = f(sim[i])

    best = int(np.argmin(fs))
    return SimplexResult(sim[best].copy(), float(fs[best]), it, nfev, converged)


def pacf_to_ar(u) -> np.ndarray:
    """Map unconstrained reals onto the stationary AR region.

    Each ``u_k`` becomes a partial autocorrelation ``u_k / sqrt(1 + u_k^2)`` in
    (-1, 1); the Durbin-Levinson recursion then builds the AR coefficients.
    """
    u = np.asarray(u, dtype=float).reshape(-1)
    r = u / np.sqrt(1.0 + u * u)
    phi = np.zeros(0)
    for k, rk in enumerate(r):
        phi = np.r_[phi - rk * phi[::-1], rk] if k else np.array([rk])
    return phi


def ar_to_pacf(phi) -> np.ndarray:
    """Inverse of :func:`pacf_to_ar`; ``phi`` must be stationary."""
    a = np.asarray(phi, dtype=float).reshape(-1).copy()
    p = a.size
    r = np.zeros(p)
    for k in range(p - 1, -1, -1):
        rk = a[k]
        if not abs(rk) < 1.0:
            raise ValueError("AR coefficients are not stationary")
        r[k] = rk
        if k:
            a = (a[:k] + rk * a[:k][::-1]) / (1.0 - rk * rk)
    return r / np.sqrt(1.0 - r * r)
