import datetime as dt
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crashskew.timeseries import (AlignmentError, DataError, DatedSeries, DomainError, align, dummy, lag,
                                  load_csv, log_change_zero_guard, log_growth, log_return, read_csv,
                                  read_table)

from conftest import write_csv


def series(values, start="2020-01-01", name="x"):
    dates = np.datetime64(start) + np.arange(len(values))
    return DatedSeries(dates, values, name)


# -- construction and CSV ---------------------------------------------------

def test_series_rejects_nonfinite_and_unsorted():
    with pytest.raises(DataError):
        series([1.0, math.nan])
    with pytest.raises(DataError):
        DatedSeries(["2020-01-02", "2020-01-01"], [1, 2])
    with pytest.raises(DataError):
        DatedSeries(["2020-01-01", "2020-01-01"], [1, 2])
    with pytest.raises(DataError):
        DatedSeries(["2020-01-01"], [1, 2])


def test_series_is_immutable():
    s = series([1.0, 2.0])
    with pytest.raises(ValueError):
        s.values[0] = 5.0


def test_load_three_rows(tmp_path):
    p = write_csv(tmp_path / "p.csv", ["date", "value"],
                  [("2020-01-02", 100), ("2020-01-03", 101), ("2020-01-06", 99)])
    s = load_csv(p)
    assert len(s) == 3
    np.testing.assert_array_equal(s.values, [100, 101, 99])
    assert str(s.dates[2]) == "2020-01-06"


def test_load_sorts_by_date(tmp_path):
    p = write_csv(tmp_path / "p.csv", ["date", "close"], [("2020-01-03", 2), ("2020-01-02", 1)])
    s = load_csv(p, value_column="close")
    np.testing.assert_array_equal(s.values, [1, 2])


def test_duplicate_date_names_row(tmp_path):
    p = write_csv(tmp_path / "p.csv", ["date", "value"],
                  [("2020-01-02", 1), ("2020-01-03", 2), ("2020-01-03", 3)])
    with pytest.raises(DataError, match="row 4.*duplicate date 2020-01-03"):
        load_csv(p)


def test_blank_value_dropped_and_reported(tmp_path):
    p = write_csv(tmp_path / "p.csv", ["date", "value"],
                  [("2020-01-01", 1), ("2020-01-02", 2), ("2020-01-03", ""), ("2020-01-04", 4),
                   ("2020-01-05", 5)])
    s, report = read_csv(p)
    assert len(s) == 4
    assert report.dropped == 1
    assert "1 dropped" in str(report)


@pytest.mark.parametrize("rows,header,match", [
    ([("2020-13-01", 1)], ["date", "value"], "row 2.*unparsable date"),
    ([("2020-01-01", 1)], ["day", "value"], "missing column 'date'"),
    ([("2020-01-01", 1)], ["date", "v"], "missing column 'value'"),
])
def test_load_errors(tmp_path, rows, header, match):
    p = write_csv(tmp_path / "p.csv", header, rows)
    with pytest.raises(DataError, match=match):
        load_csv(p)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_csv(tmp_path / "nope.csv")


def test_read_table_wide(tmp_path):
    p = write_csv(tmp_path / "w.csv", ["date", "a", "b"],
                  [("2020-01-02", 1, 2), ("2020-01-01", 3, ""), ("2020-01-03", 5, 6)])
    t = read_table(p)
    assert t.names == ["a", "b"]
    np.testing.assert_array_equal(t["a"], [1, 5])


# -- transforms ---------------------------------------------------------------

def test_log_return_constant():
    np.testing.assert_array_equal(log_return(series([100.0, 100.0, 100.0])).values, [0.0, 0.0])


def test_log_return_value():
    # ln(1.1), 40-digit mpmath evaluation
    assert log_return(series([100.0, 110.0])).values[0] == pytest.approx(0.09531017980432486, abs=1e-15)


def test_log_return_dated_at_t():
    out = log_return(series([1.0, 2.0, 4.0]))
    assert str(out.dates[0]) == "2020-01-02"


@pytest.mark.parametrize("bad", [[100.0, 0.0], [-1.0, 2.0]])
def test_log_return_domain(bad):
    with pytest.raises(DomainError):
        log_return(series(bad))


def test_log_growth_constant():
    np.testing.assert_array_equal(log_growth(series([5.0, 5.0, 5.0])).values, [0.0, 0.0])


def test_log_growth_zero_guard_matches_table_extreme():
    # ln(19/1) = 2.94443897916644 (mpmath), the rCases extreme of the descriptive table
    out = log_growth(series([0.0, 18.0]))
    assert out.values[0] == pytest.approx(2.944438979166440, abs=1e-14)
    assert round(out.values[0], 4) == 2.9444
    assert round(log_growth(series([18.0, 0.0])).values[0], 4) == -2.9444


def test_log_growth_zero_prefix_is_zero():
    out = log_growth(series([0.0, 0.0, 0.0, 3.0]))
    np.testing.assert_array_equal(out.values[:2], [0.0, 0.0])


def test_log_growth_negative_count():
    with pytest.raises(DomainError):
        log_growth(series([1.0, -1.0]))


def test_log_change_no_zero():
    assert log_change_zero_guard(series([50.0, 50.0])).values[0] == 0.0


def test_log_change_guard_series_wide():
    e = math.e
    out = log_change_zero_guard(series([0.0, e - 1.0, e ** 2 - 1.0]))
    assert out.values[1] == pytest.approx(1.0, abs=1e-12)
    assert out.values[0] == pytest.approx(1.0, abs=1e-12)


def test_log_change_negative():
    with pytest.raises(DomainError):
        log_change_zero_guard(series([1.0, -2.0]))


def test_dummy_inclusive_cutoff():
    d = dummy(["2020-01-20", "2020-01-21", "2020-01-22"], dt.date(2020, 1, 21))
    np.testing.assert_array_equal(d.values, [0, 1, 1])


def test_dummy_cutoff_outside_sample():
    dates = ["2020-01-20", "2020-01-21"]
    np.testing.assert_array_equal(dummy(dates, dt.date(2021, 1, 1)).values, [0, 0])
    np.testing.assert_array_equal(dummy(dates, dt.date(2019, 1, 1)).values, [1, 1])


def test_lag_examples():
    s = series([1.0, 2.0, 3.0])
    np.testing.assert_array_equal(lag(s, 1).values, [1, 2])
    np.testing.assert_array_equal(lag(s, 2).values, [1])
    assert str(lag(s, 2).dates[0]) == "2020-01-03"
    with pytest.raises(DomainError):
        lag(s, 3)
    with pytest.raises(ValueError):
        lag(s, 0)


def test_align_examples():
    a = DatedSeries(["2020-01-06", "2020-01-07", "2020-01-08"], [1, 2, 3], "a")
    b = DatedSeries(["2020-01-07", "2020-01-08", "2020-01-09"], [4, 5, 6], "b")
    t = align([a, b])
    assert [str(d) for d in t.dates] == ["2020-01-07", "2020-01-08"]
    np.testing.assert_array_equal(t["a"], [2, 3])
    np.testing.assert_array_equal(t["b"], [4, 5])
    assert t.dropped == {"a": 1, "b": 1}
    full = align([a, a.renamed("c")])
    assert len(full) == 3


def test_align_empty_intersection():
    a = DatedSeries(["2020-01-06"], [1], "a")
    b = DatedSeries(["2020-01-07"], [1], "b")
    with pytest.raises(AlignmentError):
        align([a, b])
    with pytest.raises(AlignmentError):
        align([])


# -- properties ----------------------------------------------------------------

prices_st = st.lists(st.floats(min_value=1e-3, max_value=1e6), min_size=2, max_size=60)


@given(prices_st)
def test_log_return_round_trip(p):
    r = log_return(series(p))
    assert np.sum(r.values) == pytest.approx(math.log(p[-1] / p[0]), abs=1e-12 * max(1, len(p)))


@given(st.lists(st.integers(0, 30), min_size=1, max_size=40, unique=True),
       st.lists(st.integers(0, 30), min_size=1, max_size=40, unique=True))
def test_align_idempotent(da, db):
    base = np.datetime64("2020-01-01")
    a = DatedSeries(base + np.sort(da), np.arange(len(da), dtype=float), "a")
    b = DatedSeries(base + np.sort(db), np.arange(len(db), dtype=float), "b")
    try:
        t = align([a, b])
    except AlignmentError:
        return
    t2 = align([t.series("a"), t.series("b")])
    np.testing.assert_array_equal(t.dates, t2.dates)
    np.testing.assert_array_equal(t["a"], t2["a"])
    assert t2.dropped == {"a": 0, "b": 0}


@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=40), st.data())
def test_lag_commutes_with_drop(vals, data):
    s = series(vals)
    k = data.draw(st.integers(1, len(vals) - 1))
    m = data.draw(st.integers(0, len(vals) - k - 1))
    a = lag(s, k).drop_first(m)
    b = lag(s, k + m) if m == 0 else None
    # dropping m leading dates of the lagged series == lagging then restricting to the same dates
    restricted = lag(s, k)
    np.testing.assert_array_equal(a.values, restricted.values[m:])
    np.testing.assert_array_equal(a.dates, s.dates[k + m:])


@given(st.lists(st.floats(0, 1e3), min_size=2, max_size=40))
def test_lag_composition(vals):
    s = series(vals)
    if len(vals) < 3:
        return
    assert lag(lag(s, 1), 1) == lag(s, 2)


@given(st.lists(st.integers(0, 2000), min_size=1, max_size=50, unique=True), st.integers(-100, 2100))
def test_dummy_binary_nondecreasing(days, cut):
    dates = np.datetime64("2017-01-01") + np.sort(days)
    d = dummy(dates, np.datetime64("2017-01-01") + cut).values
    assert set(np.unique(d)) <= {0.0, 1.0}
    assert np.all(np.diff(d) >= 0)
