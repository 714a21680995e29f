import numpy as np
import pytest

from sarimakit.errors import ArityMismatch, LengthTooShort, OutOfRange
from sarimakit.series import (
    MonthStamp, TimeSeries, difference, difference_values, integrate, integrate_values, split,
)

JAN2000 = MonthStamp(2000, 1)


def test_month_arithmetic():
    m = MonthStamp.parse("2020-03")
    assert str(m.shift(13)) == "2021-04"
    assert m.shift(-3) == MonthStamp(2019, 12)
    assert MonthStamp(2000, 1).months_until(MonthStamp(2023, 5)) == 280
    assert MonthStamp.from_ordinal(m.ordinal) == m


def test_constant_first_difference():
    assert list(difference_values([5, 5, 5, 5], 1, 0, 12)) == [0, 0, 0]


def test_seasonal_difference_of_ramp():
    assert list(difference_values(np.arange(1, 15), 0, 1, 12)) == [12, 12]


def test_zero_orders_are_identity(rng):
    x = rng.normal(size=20)
    np.testing.assert_array_equal(difference_values(x, 0, 0, 12), x)


@pytest.mark.parametrize("d,D,s", [(0, 0, 12), (1, 0, 12), (2, 0, 12), (1, 1, 12), (0, 2, 4), (2, 1, 3)])
def test_difference_length(rng, d, D, s):
    x = TimeSeries(JAN2000, rng.normal(size=40))
    w = difference(x, d, D, s)
    assert len(w) == 40 - d - D * s
    assert w.start == JAN2000.shift(d + D * s)


def test_too_short_raises():
    with pytest.raises(LengthTooShort):
        difference_values([1.0] * 12, 0, 1, 12)


def test_integrate_round_trip_simple():
    x = np.arange(1.0, 15.0)
    w = difference_values(x, 1, 0, 12)
    np.testing.assert_array_equal(integrate_values(w, 1, 0, 12, x[:1]), x)


def test_integrate_round_trip_seasonal(rng):
    x = rng.normal(size=30) * 100
    w = difference_values(x, 1, 1, 12)
    back = integrate_values(w, 1, 1, 12, x[:13])
    np.testing.assert_allclose(back, x, rtol=1e-9)


def test_integrate_constant_reconstruction():
    np.testing.assert_array_equal(integrate_values([0, 0, 0], 1, 0, 12, [5]), [5, 5, 5, 5])


def test_integrate_series_alignment(rng):
    x = TimeSeries(JAN2000, rng.normal(size=30))
    w = difference(x, 1, 1, 12)
    assert integrate(w, 1, 1, 12, x.values[:13]) == TimeSeries(JAN2000, integrate_values(w.values, 1, 1, 12, x.values[:13]))


def test_integrate_arity():
    with pytest.raises(ArityMismatch):
        integrate_values([1.0, 2.0], 1, 1, 12, [0.0])


def test_split_covid_boundaries():
    x = TimeSeries(JAN2000, np.arange(281.0))
    sp = split(x, MonthStamp(2020, 3), 12)
    assert len(sp.training) == 243
    assert sp.test.start == MonthStamp(2020, 4)
    assert sp.test.end == MonthStamp(2021, 3)
    assert sp.comparison.start == MonthStamp(2021, 4)
    assert sp.comparison.end == MonthStamp(2023, 5)


def test_split_boundary_case():
    x = TimeSeries(JAN2000, np.ones(10))
    sp = split(x, x.end, 0)
    assert len(sp.training) == 10 and len(sp.test) == 0 and len(sp.comparison) == 0


def test_split_lengths_and_concatenation(rng):
    x = TimeSeries(JAN2000, rng.normal(size=36))
    sp = split(x, JAN2000.shift(23), 6)
    assert (len(sp.training), len(sp.test), len(sp.comparison)) == (24, 6, 6)
    joined = np.concatenate([sp.training.values, sp.test.values, sp.comparison.values])
    assert joined.tobytes() == x.values.tobytes()


def test_split_out_of_range():
    x = TimeSeries(JAN2000, np.ones(10))
    with pytest.raises(OutOfRange):
        split(x, JAN2000.shift(8), 5)
    with pytest.raises(OutOfRange):
        split(x, JAN2000.shift(-1), 0)


def test_series_is_immutable():
    x = TimeSeries(JAN2000, [1.0, 2.0])
    with pytest.raises(ValueError):
        x.values[0] = 3.0
