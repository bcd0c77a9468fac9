import datetime as dt
import math

import numpy as np
import pytest

import oracles
from conftest import candles
from trendlab.labeling import BarrierConfig, LabelSeries, label_series
from trendlab.market_data import PriceSeries, ewma_volatility, log_returns
from trendlab.optimizer import (OptimizationGrid, SharpeParams, best_config, config_for_day, label_strategy_returns,
                                optimize_barriers, sharpe_ratio, write_journal)
from trendlab.synthetic import GbmParams, gen_gbm
from trendlab.trend import DegenerateError, OptimizationError, Trend


def oracle_score(ps, sigma, cfg, start=0):
    return oracles.label_strategy_sharpe(ps.open.tolist(), ps.high.tolist(), ps.low.tolist(), ps.close.tolist(),
                                         sigma, cfg.f_upper, cfg.f_lower, cfg.v_max, cfg.min_trend_days, start)


def test_sharpe_examples():
    assert sharpe_ratio([0.01, 0.02, 0.03], SharpeParams(0.0)) == pytest.approx(2 * math.sqrt(365))
    rf = 0.04 / 365
    assert sharpe_ratio([rf, rf + 0.01, rf - 0.01]) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DegenerateError):
        sharpe_ratio([0.01] * 5)
    with pytest.raises(DegenerateError):
        sharpe_ratio([0.01])


def test_strategy_returns_examples():
    ps = PriceSeries.from_closes(np.linspace(100, 110, 11))
    cfg = BarrierConfig()
    from trendlab.labeling import BarrierWindow
    d = lambda k: dt.date(2020, 1, 1) + dt.timedelta(days=k)
    bull = LabelSeries((BarrierWindow(d(0), d(10), 0, 0, d(10), Trend.BULLISH, d(10), False, 0, 10),), cfg)
    r = label_strategy_returns(bull, ps).values
    assert np.prod(1 + r) - 1 == pytest.approx(0.10)
    ps2 = PriceSeries.from_closes(np.linspace(100, 90, 11))
    bear = LabelSeries((BarrierWindow(d(0), d(10), 0, 0, d(10), Trend.BEARISH, d(10), False, 0, 10),), cfg)
    r2 = label_strategy_returns(bear, ps2).values
    assert np.prod(1 + r2) - 1 > 0.10  # compounding the negated daily moves beats 10%
    assert np.prod(1 + r2) - 1 == pytest.approx(np.prod(2 - ps2.close[1:] / ps2.close[:-1]) - 1)
    neutral = LabelSeries((BarrierWindow(d(0), d(10), 0, 0, d(10), Trend.NEUTRAL, None, False, 0, 10),), cfg)
    assert not label_strategy_returns(neutral, ps).values.any()


def test_singleton_grid():
    ps = gen_gbm(GbmParams(seed=9, days=400))
    vols = ewma_volatility(log_returns(ps))
    grid = OptimizationGrid((1.25,), (0.75,), (9,))
    periods = optimize_barriers(ps, vols, grid)
    assert all(p.config.key() == (1.25, 0.75, 9) for p in periods)
    p = periods[0]
    i0, i1 = ps.index_of(p.interval_start), ps.index_of(p.interval_end)
    sub = ps.slice(i0, i1 + 1)
    sigma = vols.sigma[i0:i1 + 1].tolist()
    assert p.sharpe == pytest.approx(oracle_score(sub, sigma, p.config), rel=1e-12)


def test_grid_exhaustive_and_tie_break():
    ps = gen_gbm(GbmParams(seed=21, days=230, start_date=dt.date(2020, 1, 1)))
    vols = ewma_volatility(log_returns(ps))
    grid = OptimizationGrid((0.5, 1.0, 2.0), (0.5, 1.0, 2.0), (8, 12))
    cfgs = grid.configs()
    assert [c.key() for c in cfgs] == sorted(c.key() for c in cfgs)
    best, sr, scores = best_config(ps, vols, cfgs, 30)
    ref = [oracle_score(ps, vols.sigma.tolist(), c, 30) for c in cfgs]
    assert scores == pytest.approx(ref, rel=1e-10)
    top = max(ref)
    first = next(c for c, s in zip(cfgs, ref) if s == top)
    assert best == first and sr == pytest.approx(top)


def test_workers_do_not_change_result():
    ps = gen_gbm(GbmParams(seed=5, days=250))
    vols = ewma_volatility(log_returns(ps))
    cfgs = OptimizationGrid((0.5, 1.0), (1.0, 2.0), (8, 15)).configs()
    assert best_config(ps, vols, cfgs, 30, workers=1)[:2] == best_config(ps, vols, cfgs, 30, workers=2)[:2]


def test_uptrend_picks_mostly_bullish():
    n = 400
    closes = 100 * np.exp(0.01 * np.arange(n) + 0.004 * np.sin(np.arange(n)))
    ps = candles(closes)
    vols = ewma_volatility(log_returns(ps))
    grid = OptimizationGrid((0.5, 1.0, 2.0), (0.5, 1.0, 2.0), (8, 12))
    p = optimize_barriers(ps, vols, grid)[0]
    i0, i1 = ps.index_of(p.interval_start), ps.index_of(p.interval_end)
    ls = label_series(ps.slice(i0, i1 + 1), vols, p.config)
    bull = sum(w.length for w in ls.windows if w.label is Trend.BULLISH)
    assert bull / sum(w.length for w in ls.windows) > 0.5


def test_walk_forward_schedule_and_future_mutation():
    ps = gen_gbm(GbmParams(seed=13, days=800))
    vols = ewma_volatility(log_returns(ps))
    grid = OptimizationGrid((0.5, 1.0, 2.0), (0.5, 1.0, 2.0), (8, 12))
    periods = optimize_barriers(ps, vols, grid)
    assert periods[0].interval_start == dt.date(2020, 7, 1)
    assert periods[0].applies_from == dt.date(2021, 1, 1)
    assert config_for_day(periods, dt.date(2020, 12, 31)) is None
    assert config_for_day(periods, dt.date(2021, 2, 1)) == periods[0].config
    # scramble every price after the second interval; earlier choices must not move
    cut = ps.index_of(periods[1].interval_end) + 1
    rng = np.random.default_rng(0)
    scale = np.concatenate([np.ones(cut), np.exp(rng.normal(0, 0.3, len(ps) - cut)).cumprod()])
    mut = candles(ps.close * scale, highs=ps.high * scale, lows=ps.low * scale, opens=ps.open * scale)
    periods2 = optimize_barriers(mut, ewma_volatility(log_returns(mut)), grid)
    assert [(p.config, p.sharpe) for p in periods2[:2]] == [(p.config, p.sharpe) for p in periods[:2]]


def test_all_degenerate_grid_raises():
    ps = candles([100.0] * 400)
    vols = ewma_volatility(log_returns(ps))
    with pytest.raises(OptimizationError, match="2020-07-01"):
        optimize_barriers(ps, vols, OptimizationGrid((1.0,), (1.0,), (8,)))


def test_short_history_raises():
    ps = gen_gbm(GbmParams(seed=1, days=100))
    with pytest.raises(OptimizationError):
        optimize_barriers(ps, ewma_volatility(log_returns(ps)), OptimizationGrid((1.0,), (1.0,), (8,)))


def test_journal(tmp_path):
    ps = gen_gbm(GbmParams(seed=9, days=400))
    periods = optimize_barriers(ps, ewma_volatility(log_returns(ps)), OptimizationGrid((1.0,), (1.0, 2.0), (8,)))
    write_journal(periods, tmp_path / "j.csv")
    lines = (tmp_path / "j.csv").read_text().splitlines()
    assert lines[0] == "interval_start,interval_end,f_upper,f_lower,v_max,sharpe"
    assert len(lines) == len(periods) + 1
