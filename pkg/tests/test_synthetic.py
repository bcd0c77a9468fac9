import math
from collections import Counter

import numpy as np
import pytest

from conftest import day
from trendlab.labeling import BarrierConfig, daily_labels, label_series
from trendlab.market_data import ewma_volatility, log_returns
from trendlab.synthetic import GbmParams, SyntheticClassifierParams, gen_gbm, gen_predictions, gen_tweets, metadata
from trendlab.trend import Trend


def test_zero_volatility_is_exponential():
    ps = gen_gbm(GbmParams(volatility=0.0, drift=0.365, days=50))
    r = log_returns(ps).values
    assert np.allclose(r, 0.001, atol=1e-14)


def test_same_seed_same_series():
    a, b = gen_gbm(GbmParams(seed=4)), gen_gbm(GbmParams(seed=4))
    assert np.array_equal(a.close, b.close) and np.array_equal(a.high, b.high)
    assert not np.array_equal(a.close, gen_gbm(GbmParams(seed=5)).close)


def test_candles_are_consistent():
    ps = gen_gbm(GbmParams(seed=2, days=300))
    assert np.all(ps.high >= np.maximum(ps.open, ps.close))
    assert np.all(ps.low <= np.minimum(ps.open, ps.close))
    assert np.array_equal(ps.open[1:], ps.close[:-1])


def test_drift_zero_mean():
    ps = gen_gbm(GbmParams(seed=0, days=100_000, volatility=0.6))
    r = log_returns(ps).values
    se = r.std(ddof=1) / math.sqrt(len(r))
    assert abs(r.mean()) <= 3 * se
    assert r.std(ddof=1) == pytest.approx(0.6 / math.sqrt(365), rel=0.02)


def _labels(seed=0):
    ps = gen_gbm(GbmParams(seed=seed, days=300))
    return daily_labels(label_series(ps, ewma_volatility(log_returns(ps)), BarrierConfig()))


def test_perfect_classifier():
    labels = _labels()
    preds = gen_predictions(labels, SyntheticClassifierParams(accuracy=1.0, tweets_per_day=4))
    assert len(preds) == 4 * len(labels)
    assert all(p.predicted is labels[p.day] for p in preds)


def test_chance_classifier_rate():
    labels = {day(k): Trend(k % 3) for k in range(5000)}
    preds = gen_predictions(labels, SyntheticClassifierParams(seed=1, accuracy=1 / 3, tweets_per_day=20))
    assert len(preds) == 100_000
    for cls in Trend:
        sub = [p for p in preds if labels[p.day] is cls]
        acc = sum(p.predicted is cls for p in sub) / len(sub)
        assert abs(acc - 1 / 3) <= 0.02
        wrong = Counter(p.predicted for p in sub if p.predicted is not cls)
        assert len(wrong) == 2 and abs(wrong.most_common()[0][1] / sum(wrong.values()) - 0.5) < 0.02


def test_neutral_biased_errors():
    labels = {day(k): Trend.BULLISH for k in range(2000)}
    preds = gen_predictions(labels, SyntheticClassifierParams(seed=2, accuracy=0.5, tweets_per_day=10,
                                                              error_model="neutral_biased"))
    wrong = [p.predicted for p in preds if p.predicted is not Trend.BULLISH]
    assert sum(w is Trend.NEUTRAL for w in wrong) / len(wrong) == pytest.approx(0.8, abs=0.02)


def test_predictions_deterministic_and_coupled():
    labels = _labels(3)
    p1 = gen_predictions(labels, SyntheticClassifierParams(seed=7, accuracy=0.6))
    p2 = gen_predictions(labels, SyntheticClassifierParams(seed=7, accuracy=0.6))
    assert p1 == p2
    p3 = gen_predictions(labels, SyntheticClassifierParams(seed=7, accuracy=0.8))
    # raising accuracy only turns wrong predictions into right ones
    for a, b in zip(p1, p3):
        if a.predicted is labels[a.day]:
            assert b.predicted is labels[b.day]


def test_param_validation():
    with pytest.raises(ValueError):
        SyntheticClassifierParams(accuracy=0.2)
    with pytest.raises(ValueError):
        SyntheticClassifierParams(error_model="weird")
    with pytest.raises(ValueError):
        GbmParams(days=1)


def test_tweets_and_metadata():
    labels = _labels()
    preds = gen_predictions(labels, SyntheticClassifierParams(tweets_per_day=2))
    tw = gen_tweets(preds, seed=0)
    assert [t.id for t in tw] == [p.tweet_id for p in preds]
    assert gen_tweets(preds, seed=0) == tw
    assert metadata()["rng"] == "numpy.random.PCG64"
