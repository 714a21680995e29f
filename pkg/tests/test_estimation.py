import math

import numpy as np
import pytest

from sarimakit.errors import DegenerateSampleSize, InsufficientData
from sarimakit.estimation import FitConfig, FitResult, fit, information_criteria
from sarimakit.kernel import LOG_2PI, ModelOrder, ParamVector, loglik, profile_loglik, simulate
from sarimakit.optimize import ar_to_pacf, nelder_mead, pacf_to_ar
from sarimakit.series import MonthStamp, TimeSeries, difference

AR1 = ModelOrder(1, 0, 0, 0, 0, 0)
WN = ModelOrder(0, 0, 0, 0, 0, 0)


def test_nelder_mead_rosenbrock():
    f = lambda x: (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2
    res = nelder_mead(f, np.array([-1.2, 1.0]), ftol=1e-14, xtol=1e-8, max_iter=5000)
    assert res.converged
    np.testing.assert_allclose(res.x, [1, 1], atol=1e-4)


def test_pacf_transform_round_trip(rng):
    for _ in range(20):
        u = rng.uniform(-0.95, 0.95, size=3)
        phi = pacf_to_ar(u / np.sqrt(1 - u ** 2))
        roots = np.roots(np.r_[1.0, -phi])
        assert np.all(np.abs(roots) < 1)
        np.testing.assert_allclose(pacf_to_ar(ar_to_pacf(phi)), phi, atol=1e-12)


def test_ar1_recovery():
    y = simulate(AR1, ParamVector(ar=(0.6,)), 2000, seed=11)
    res = fit(AR1, y)
    assert res.converged
    assert res.params.ar[0] == pytest.approx(0.6, abs=0.05)
    assert res.sigma2 == pytest.approx(1.0, abs=0.1)
    asym = math.sqrt((1 - 0.6 ** 2) / 2000)
    assert res.stderr[0] == pytest.approx(asym, rel=0.25)
    assert res.stderr.shape == (1,)


def test_white_noise_fit_is_closed_form(rng):
    x = TimeSeries(MonthStamp(2001, 1), rng.normal(size=80) * 2.5 + 0.3)
    res = fit(WN, x)
    s2 = np.mean(x.values ** 2)
    assert res.sigma2 == pytest.approx(s2, rel=1e-12)
    assert res.loglik == pytest.approx(-0.5 * 80 * (LOG_2PI + math.log(s2) + 1), abs=1e-9)
    assert res.stderr.size == 0


def test_local_max_property():
    o = ModelOrder(1, 1, 1, 0, 1, 1)
    y = simulate(o, ParamVector(ar=(0.4,), ma=(-0.3,), sma=(-0.5,)), 300, seed=5)
    res = fit(o, y)
    w = difference(y, 1, 1, 12).values
    base = res.params.coefficients()
    for i in range(base.size):
        for delta in (-1e-3, 1e-3):
            c = base.copy()
            c[i] += delta
            ll, _ = profile_loglik(o, ParamVector.from_coefficients(o, c), w)
            assert ll <= res.loglik + 1e-8 * max(1.0, abs(res.loglik))


def test_fit_result_consistency():
    o = ModelOrder(0, 1, 1, 0, 1, 1)
    y = simulate(o, ParamVector(ma=(-0.4,), sma=(-0.6,)), 400, seed=2)
    res = fit(o, y)
    assert res.n_effective == 400 - 13
    assert res.k == 3
    w = difference(y, 1, 1, 12).values
    assert res.loglik == pytest.approx(loglik(o, res.params, w), abs=1e-9)
    assert (res.aic, res.aicc, res.bic) == information_criteria(res.loglik, 3, 387)


def test_fit_json_round_trip():
    y = simulate(AR1, ParamVector(ar=(0.3,)), 200, seed=1)
    res = fit(AR1, y)
    back = FitResult.from_dict(res.to_dict())
    assert back.params == res.params and back.loglik == res.loglik
    np.testing.assert_array_equal(back.stderr, res.stderr)


def test_insufficient_data():
    with pytest.raises(InsufficientData):
        fit(ModelOrder(2, 0, 2, 0, 0, 0), TimeSeries(MonthStamp(2000, 1), np.zeros(30)))


def test_information_criteria_examples():
    assert information_criteria(0.0, 0, 10)[0] == 0.0 and information_criteria(0.0, 0, 10)[2] == 0.0
    aic, aicc, bic = information_criteria(-100.0, 3, 50)
    assert aic == 206.0
    assert aicc == pytest.approx(206 + 24 / 46, abs=1e-12)
    assert bic == pytest.approx(200 + 3 * math.log(50), abs=1e-12)
    with pytest.raises(DegenerateSampleSize):
        information_criteria(-1.0, 5, 6)


def test_convention_pin():
    aic, _, _ = information_criteria(-3373.02, 12, 218)
    assert aic == pytest.approx(6770.04, abs=1e-9)
    assert abs(aic - 6770.03) <= 0.05


def test_information_criteria_identities(rng):
    for _ in range(1000):
        ll = rng.uniform(-1e4, 1e4)
        k = int(rng.integers(1, 30))
        n = int(rng.integers(k + 2, 5000))
        aic, aicc, bic = information_criteria(ll, k, n)
        assert aic == pytest.approx(-2 * ll + 2 * k, rel=1e-12, abs=1e-9)
        assert aicc - aic == pytest.approx(2 * k * (k + 1) / (n - k - 1), rel=1e-9, abs=1e-9)
        assert bic - aic == pytest.approx(k * (math.log(n) - 2), rel=1e-9, abs=1e-9)
        assert aicc > aic
        if n >= 8:
            assert bic > aic


def test_fit_is_deterministic():
    o = ModelOrder(1, 0, 1, 0, 0, 0)
    y = simulate(o, ParamVector(ar=(0.5,), ma=(0.3,)), 300, seed=9)
    a, b = fit(o, y, FitConfig()), fit(o, y, FitConfig())
    assert a.to_json() == b.to_json()
