import numpy as np
import pytest
from scipy.signal import lfilter
from scipy.stats import multivariate_normal

from sarimakit.kernel import expand


def dense_loglik(order, params, x):
    """Exact Gaussian log-density from the full ARMA autocovariance matrix."""
    exp = expand(order, params)
    n = len(x)
    m = 4000
    impulse = np.zeros(m)
    impulse[0] = 1.0
    psi = lfilter(exp.ma_poly, exp.ar_poly, impulse)
    gamma = np.array([psi[: m - k] @ psi[k:] for k in range(n)]) * params.sigma2
    cov = gamma[np.abs(np.subtract.outer(np.arange(n), np.arange(n)))]
    return multivariate_normal(np.zeros(n), cov).logpdf(x)


def random_stable(rng, k, radius=0.85):
    """Coefficients of a degree-k polynomial with all roots outside the unit circle."""
    if k == 0:
        return ()
    poly = np.array([1.0])
    for _ in range(k):
        poly = np.convolve(poly, [1.0, -rng.uniform(-radius, radius)])
    return tuple(-poly[1:])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def record(name, passed, detail):
    """Store one acceptance verdict for the end-of-run summary and return it."""
    line = f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
