import datetime as dt
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from conftest import candles
from trendlab.market_data import (EwmaParams, IndicatorThresholds, PriceSeries, ReturnSeries, discretize_indicator,
                                  ewma_volatility, half_year_intervals, load_ohlcv, log_returns, roc,
                                  roc_threshold_schedule, roc_thresholds, rsi, write_ohlcv)
from trendlab.trend import DataError, DegenerateError, InsufficientHistoryError, Trend

HEADER = "timestamp,open,high,low,close,volume\n"


def _returns(values, start="2020-01-02"):
    days = np.datetime64(start) + np.arange(len(values)) * np.timedelta64(1, "D")
    return ReturnSeries(days, np.asarray(values, dtype=float))


# --- ingestion

def test_load_three_rows(tmp_path):
    p = tmp_path / "p.csv"
    p.write_text(HEADER + "2020-01-01,1,2,0.5,1.5,10\n2020-01-02,1.5,2,1,1.2,0\n2020-01-03,1.2,1.3,1.1,1.25,3\n")
    ps = load_ohlcv(p)
    assert len(ps) == 3
    assert np.all(np.diff(ps.days) > np.timedelta64(0, "D"))
    assert ps.close.tolist() == [1.5, 1.2, 1.25]


def test_load_rejects_inconsistent_row(tmp_path):
    p = tmp_path / "p.csv"
    p.write_text(HEADER + "2020-01-01,99.5,99,100,99.5,1\n")
    with pytest.raises(DataError, match=r"p\.csv:2"):
        load_ohlcv(p)


def test_load_rejects_duplicate_day(tmp_path):
    p = tmp_path / "p.csv"
    p.write_text(HEADER + "2020-01-01,1,1,1,1,1\n2020-01-01,1,1,1,1,1\n")
    with pytest.raises(DataError, match="duplicate"):
        load_ohlcv(p)


def test_load_rejects_backwards_and_bad_rows(tmp_path):
    p = tmp_path / "p.csv"
    p.write_text(HEADER + "2020-01-02,1,1,1,1,1\n2020-01-01,1,1,1,1,1\n")
    with pytest.raises(DataError, match="non-monotonic"):
        load_ohlcv(p)
    p.write_text(HEADER + "2020-01-01,1,x,1,1,1\n")
    with pytest.raises(DataError, match=":2"):
        load_ohlcv(p)
    p.write_text("date,open,high,low,close,volume\n")
    with pytest.raises(DataError):
        load_ohlcv(p)


def test_gap_policy(tmp_path):
    p = tmp_path / "p.csv"
    p.write_text(HEADER + "2020-01-01,1,1,1,1,1\n2020-01-04,2,2,2,2,1\n")
    with pytest.raises(DataError, match="missing 2"):
        load_ohlcv(p)
    ps = load_ohlcv(p, fill_gaps="forward")
    assert ps.close.tolist() == [1, 1, 1, 2]
    assert ps.volume.tolist() == [1, 0, 0, 1]


def test_roundtrip(tmp_path, gbm):
    ps = gbm(seed=3, days=50)
    write_ohlcv(ps, tmp_path / "x.csv")
    back = load_ohlcv(tmp_path / "x.csv")
    for k in ("days", "open", "high", "low", "close", "volume"):
        assert np.array_equal(getattr(ps, k), getattr(back, k))


# --- returns and EWMA

def test_log_returns_examples():
    assert log_returns(PriceSeries.from_closes([100, 100])).values.tolist() == [0.0]
    r = log_returns(PriceSeries.from_closes([100, 110, 99])).values
    assert r[0] == pytest.approx(0.0953101798, abs=1e-9)
    assert r[1] == pytest.approx(-0.1053605157, abs=1e-9)


def test_log_returns_rejects_nonpositive():
    with pytest.raises(DataError):
        log_returns(PriceSeries.from_closes([100, 0.0, 1]))


def test_ewma_zero_returns_exact():
    v = ewma_volatility(_returns(np.zeros(60)), EwmaParams(30))
    assert np.all(np.isnan(v.sigma[:30]))
    assert np.all(v.sigma[30:] == 0.0)
    assert v.warmup == 30


def test_ewma_constant_returns():
    v = ewma_volatility(_returns(np.full(80, -0.02)), EwmaParams(30))
    assert np.max(np.abs(v.sigma[30:] - 0.02)) <= 1e-12


def test_ewma_hand_example():
    v = ewma_volatility(_returns([0.01, -0.02]), EwmaParams(2))
    assert v.sigma[2] == pytest.approx(math.sqrt(0.75 * (0.0004 + 0.0001 / 3)), abs=1e-15)
    assert v.sigma[2] == pytest.approx(0.018028, abs=1e-6)


def test_ewma_short_series():
    with pytest.raises(InsufficientHistoryError):
        ewma_volatility(_returns(np.zeros(10)), EwmaParams(30))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-0.3, 0.3), min_size=6, max_size=60), st.integers(2, 6))
def test_ewma_matches_oracle(rs, tau):
    v = ewma_volatility(_returns(rs), EwmaParams(tau))
    ref = oracles.ewma_sigma(rs, tau)
    for k, s in enumerate(ref):
        got = v.sigma[k + 1]
        if s is None:
            assert math.isnan(got)
        else:
            assert got == pytest.approx(s, rel=1e-10, abs=1e-15)


def test_ewma_uses_no_future_returns(gbm):
    r = log_returns(gbm(seed=1, days=120))
    base = ewma_volatility(r, EwmaParams(10)).sigma
    vals = r.values.copy()
    vals[70:] *= 5.0
    mutated = ewma_volatility(ReturnSeries(r.days, vals), EwmaParams(10)).sigma
    # price day 70 is the last one whose sigma ignores return 70 (which ends on price day 71)
    assert np.array_equal(base[:71], mutated[:71], equal_nan=True)


# --- indicators

def test_rsi_monotone_paths():
    assert rsi(PriceSeries.from_closes(np.arange(100, 115.0))).values[14] == 100.0
    assert rsi(PriceSeries.from_closes(np.arange(115, 100.0, -1))).values[14] == 0.0
    assert rsi(PriceSeries.from_closes(np.full(15, 7.0))).values[14] == 50.0


def test_rsi_reference_series():
    closes = [44.34, 44.09, 44.15, 43.61, 44.33, 44.83, 45.10, 45.42, 45.84, 46.08,
              45.89, 46.03, 45.61, 46.28, 46.28, 46.00, 46.03, 46.41, 46.22, 45.64]
    got = rsi(PriceSeries.from_closes(closes)).values
    ref = oracles.wilder_rsi(closes)
    assert np.all(np.isnan(got[:14]))
    for k in range(14, len(closes)):
        assert got[k] == pytest.approx(ref[k], abs=1e-10)
    assert got[14] == pytest.approx(70.46, abs=0.01)


def test_roc_examples():
    closes = [100.0] * 8 + [110.0]
    assert roc(PriceSeries.from_closes(closes)).values[8] == pytest.approx(0.10)
    flat = roc(PriceSeries.from_closes([100.0] * 9)).values
    assert flat[8] == 0.0


def test_roc_jump_window():
    closes = [100.0] * 20 + [105.0] * 20
    v = roc(PriceSeries.from_closes(closes)).values
    nonzero = [k for k in range(8, 40) if v[k] != 0]
    assert nonzero == list(range(20, 28))


def test_roc_thresholds_oracle():
    rng = np.random.default_rng(5)
    rs = rng.normal(0, 0.03, 300)
    th = roc_thresholds(_returns(rs), window=180, k=1.5)
    tail = rs[-180:]
    comp = [math.exp(math.fsum(tail[i:i + 8])) - 1 for i in range(180 - 8 + 1)]
    s = oracles.sample_std(comp)
    assert th.upper == pytest.approx(1.5 * s, abs=1e-12)
    assert th.lower == pytest.approx(-1.5 * s, abs=1e-12)


def test_roc_thresholds_degenerate():
    with pytest.raises(DegenerateError):
        roc_thresholds(_returns(np.zeros(200)))
    with pytest.raises(InsufficientHistoryError):
        roc_thresholds(_returns(np.ones(50) * 0.01))


def test_roc_threshold_schedule_blocks():
    rs = np.random.default_rng(0).normal(0, 0.02, 730)
    r = _returns(rs, start="2020-01-02")
    sched = roc_threshold_schedule(r, dt.date(2020, 1, 1), dt.date(2021, 12, 31))
    assert [s for s, _, _ in sched] == [dt.date(2020, 1, 1), dt.date(2020, 7, 1),
                                        dt.date(2021, 1, 1), dt.date(2021, 7, 1)]
    assert sched[0][2] is None and all(th is not None for _, _, th in sched[1:])
    # thresholds only see returns dated before the block
    expect = roc_thresholds(r.until(dt.date(2021, 1, 1)))
    assert sched[2][2] == expect


def test_discretize_polarity():
    rsi_th = IndicatorThresholds(30, 70)
    assert discretize_indicator(75, "RSI", rsi_th) is Trend.BEARISH
    assert discretize_indicator(50, "RSI", rsi_th) is Trend.NEUTRAL
    assert discretize_indicator(20, "RSI", rsi_th) is Trend.BULLISH
    roc_th = IndicatorThresholds(-0.05, 0.05)
    assert discretize_indicator(0.08, "ROC", roc_th) is Trend.BULLISH
    assert discretize_indicator(-0.08, "ROC", roc_th) is Trend.BEARISH
    assert discretize_indicator(0.05, "ROC", roc_th) is Trend.NEUTRAL


@given(st.floats(-1e6, 1e6), st.sampled_from(["RSI", "ROC"]))
def test_discretize_total(value, kind):
    assert discretize_indicator(value, kind, IndicatorThresholds(-1, 1)) in tuple(Trend)


def test_thresholds_must_be_ordered():
    with pytest.raises(DegenerateError):
        IndicatorThresholds(0.0, 0.0)


def test_half_year_intervals():
    blocks = half_year_intervals(dt.date(2020, 2, 10), dt.date(2021, 7, 3))
    assert blocks == [(dt.date(2020, 1, 1), dt.date(2020, 6, 30), False),
                      (dt.date(2020, 7, 1), dt.date(2020, 12, 31), True),
                      (dt.date(2021, 1, 1), dt.date(2021, 6, 30), True),
                      (dt.date(2021, 7, 1), dt.date(2021, 12, 31), False)]


def test_candle_helper_is_consistent():
    ps = candles([100, 101, 99])
    assert ps.open.tolist() == [100, 100, 101]
