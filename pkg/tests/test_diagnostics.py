import math

import numpy as np
import pytest
from scipy import stats

from sarimakit.diagnostics import (
    acf, adf_pvalue, adf_test, box_pierce, chi2_sf, kolmogorov_sf, ks_normality, ljung_box, pacf,
    portmanteau_from_acf, residual_report,
)
from sarimakit.errors import (
    CollinearRegressors, DegreesOfFreedomNonPositive, InsufficientData, LagTooLarge, SingularToeplitz,
    ZeroVariance,
)
from sarimakit.estimation import fit
from sarimakit.kernel import ModelOrder, ParamVector, simulate


def test_chi2_matches_scipy():
    for df in (1, 2, 3, 10, 21, 24, 60):
        for x in (0.01, 0.5, 1.0, 5.0, 20.0, 29.106, 80.0, 300.0):
            assert chi2_sf(x, df) == pytest.approx(stats.chi2.sf(x, df), rel=1e-10, abs=1e-300)


def test_chi2_reference_point():
    assert 0.17 <= chi2_sf(29.106, 24) <= 0.22


def test_kolmogorov_matches_scipy():
    for lam in np.linspace(0.2, 3.0, 57):
        assert kolmogorov_sf(lam) == pytest.approx(stats.kstwobign.sf(lam), abs=1e-12)
    assert kolmogorov_sf(1.36) == pytest.approx(0.05, abs=0.002)


def test_acf_definitions(rng):
    x = rng.normal(size=200)
    assert acf(x, 5)[0] == 1.0
    alt = np.array([1.0, -1.0] * 50)
    assert acf(alt, 1)[1] == pytest.approx(-0.99, abs=1e-12)
    assert pacf(x, 3)[0] == pytest.approx(acf(x, 1)[1], abs=1e-15)


def test_acf_bartlett_bound():
    x = np.random.default_rng(1).normal(size=10_000)
    r = acf(x, 50)[1:]
    assert np.mean(np.abs(r) < 3 / math.sqrt(x.size)) >= 0.99
    assert np.mean(np.abs(pacf(x, 50)) < 3 / math.sqrt(x.size)) >= 0.99


def test_pacf_ar1_cutoff():
    x = simulate(ModelOrder(1, 0, 0, 0, 0, 0), ParamVector(ar=(0.6,)), 100_000, seed=2).values
    p = pacf(x, 6)
    assert p[0] == pytest.approx(0.6, abs=0.01)
    assert np.all(np.abs(p[1:]) < 0.01)


def test_affine_invariance(rng):
    x = rng.normal(size=300).cumsum()
    for a, b in ((3.0, 10.0), (-0.5, -7.0)):
        np.testing.assert_allclose(acf(a * x + b, 20), acf(x, 20), atol=1e-9)
        np.testing.assert_allclose(pacf(a * x + b, 20), pacf(x, 20), atol=1e-9)


def test_correlogram_errors():
    with pytest.raises(LagTooLarge):
        acf([1.0, 2.0, 3.0], 3)
    with pytest.raises(ZeroVariance):
        acf(np.ones(10), 2)
    with pytest.raises(SingularToeplitz):
        pacf(np.ones(10), 2)


@pytest.mark.parametrize("ours,theirs", [("trend", "ct"), ("drift", "c"), ("none", "n")])
def test_adf_statistic_matches_statsmodels(rng, ours, theirs):
    tsa = pytest.importorskip("statsmodels.tsa.stattools")
    x = rng.normal(size=250).cumsum() * 0.3 + rng.normal(size=250)
    res = adf_test(x, ours)
    ref = tsa.adfuller(x, maxlag=res.detail["lags"], autolag=None, regression=theirs)
    assert res.statistic == pytest.approx(ref[0], abs=1e-8)
    assert res.detail["nobs"] == ref[3]


def test_adf_default_lags_and_clamp(rng):
    res = adf_test(rng.normal(size=230))
    assert res.detail["lags"] == int((229) ** (1 / 3))
    assert res.p_value == 0.01
    assert res.detail["flag"].startswith("p-value smaller")


def test_adf_pvalue_interpolates_table():
    assert adf_pvalue(-3.41, 10**5, "trend")[0] == pytest.approx(0.05, abs=1e-9)
    assert adf_pvalue(-2.86, 10**5, "drift")[0] == pytest.approx(0.05, abs=1e-9)
    p, flag = adf_pvalue(5.0, 100, "trend")
    assert p == 0.99 and flag


def test_adf_power_and_size():
    rej_iid = [adf_test(np.random.default_rng(s).normal(size=500)).p_value <= 0.01 for s in range(100)]
    assert np.mean(rej_iid) >= 0.99
    p_rw = np.array([adf_test(np.random.default_rng(s).normal(size=500).cumsum()).p_value for s in range(200)])
    assert np.mean(p_rw > 0.05) >= 0.90
    # a correctly sized test keeps the null at the 10% level about 90% of the time
    assert 0.85 <= np.mean(p_rw > 0.10) <= 0.95


def test_adf_errors():
    with pytest.raises(InsufficientData):
        adf_test(np.arange(8.0), lags=1)
    with pytest.raises(CollinearRegressors):
        adf_test(np.ones(40), "trend", lags=1)


def test_box_pierce_hand_example():
    r = np.array([1.0, 0.2, -0.1])
    out = portmanteau_from_acf(r, 100, 2, 0)
    assert out.statistic == pytest.approx(5.0, abs=1e-12)
    assert out.p_value == pytest.approx(math.exp(-2.5), abs=1e-14)


def test_portmanteau_perfect_whiteness():
    r = np.r_[1.0, np.zeros(10)]
    for kind in ("box-pierce", "ljung-box"):
        out = portmanteau_from_acf(r, 50, 10, 0, kind)
        assert out.statistic == 0.0 and out.p_value == 1.0


def test_ljung_box_dominates(rng):
    for _ in range(200):
        x = rng.normal(size=int(rng.integers(30, 200)))
        h = int(rng.integers(1, 25))
        assert ljung_box(x, h).statistic >= box_pierce(x, h).statistic


def test_ljung_box_matches_statsmodels(rng):
    diag = pytest.importorskip("statsmodels.stats.diagnostic")
    x = rng.normal(size=150)
    ref = diag.acorr_ljungbox(x, lags=[24], boxpierce=True, model_df=3)
    assert ljung_box(x, 24, 3).statistic == pytest.approx(float(ref["lb_stat"].iloc[0]), rel=1e-10)
    assert ljung_box(x, 24, 3).p_value == pytest.approx(float(ref["lb_pvalue"].iloc[0]), rel=1e-8)
    assert box_pierce(x, 24, 3).statistic == pytest.approx(float(ref["bp_stat"].iloc[0]), rel=1e-10)


def test_portmanteau_convergence():
    x = np.random.default_rng(3).normal(size=10_000)
    q, qs = box_pierce(x, 24).statistic, ljung_box(x, 24).statistic
    assert (qs - q) / q < 0.05


def test_portmanteau_dof_error(rng):
    with pytest.raises(DegreesOfFreedomNonPositive):
        box_pierce(rng.normal(size=50), 3, 3)


def test_ks_matches_scipy_statistic(rng):
    x = rng.normal(size=300) * 2 + 1
    res = ks_normality(x)
    ref = stats.kstest(x, "norm", args=(x.mean(), x.std(ddof=1)))
    assert res.statistic == pytest.approx(ref.statistic, abs=1e-12)


def test_ks_power_on_exponential():
    assert ks_normality(np.random.default_rng(4).exponential(size=500)).p_value < 0.001


def test_ks_size_is_conservative():
    rej = [ks_normality(np.random.default_rng(s).normal(size=1000)).p_value < 0.05 for s in range(200)]
    assert np.mean(rej) <= 0.05


def test_ks_errors():
    with pytest.raises(InsufficientData):
        ks_normality(np.arange(5.0))
    with pytest.raises(ZeroVariance):
        ks_normality(np.ones(20))


def test_residual_report_detects_misspecification():
    y = simulate(ModelOrder(1, 0, 0, 0, 0, 0), ParamVector(ar=(0.7,)), 300, seed=6)
    res = fit(ModelOrder(0, 0, 0, 0, 0, 0), y)
    rep = residual_report(res, y)
    assert not rep.no_autocorrelation_ok
    assert rep.to_dict()["checks"]["no_autocorrelation"] is False


def test_residual_report_well_specified():
    o = ModelOrder(1, 0, 0, 0, 0, 0)
    passed = 0
    for seed in range(20):
        y = simulate(o, ParamVector(ar=(0.5,)), 300, seed=seed)
        passed += residual_report(fit(o, y), y).all_ok
    assert passed >= 18


def test_residual_report_too_short():
    o = ModelOrder(0, 1, 0, 0, 0, 0)
    y = simulate(o, ParamVector(), 30, seed=1)
    res = fit(o, y)
    with pytest.raises(InsufficientData):
        residual_report(res, y.window(y.start, y.start))
