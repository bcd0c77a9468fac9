import datetime as dt

import numpy as np
import pytest

from trendlab.market_data import ONE_DAY, PriceSeries, to_day
from trendlab.synthetic import GbmParams, gen_gbm


def candles(closes, highs=None, lows=None, opens=None, start="2020-01-01"):
    """PriceSeries from explicit columns; missing columns default to the close path."""
    c = np.asarray(closes, dtype=float)
    o = np.asarray(opens if opens is not None else np.concatenate([[c[0]], c[:-1]]), dtype=float)
    h = np.asarray(highs if highs is not None else np.maximum(o, c), dtype=float)
    lo = np.asarray(lows if lows is not None else np.minimum(o, c), dtype=float)
    days = to_day(start) + np.arange(len(c)) * ONE_DAY
    return PriceSeries(days, o, h, lo, c, np.ones(len(c)))


@pytest.fixture
def gbm():
    def make(seed=0, days=365, drift=0.0, volatility=0.6):
        return gen_gbm(GbmParams(seed=seed, days=days, drift=drift, volatility=volatility))
    return make


D0 = dt.date(2020, 1, 1)


def day(k: int) -> dt.date:
    return D0 + dt.timedelta(days=k)


ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
