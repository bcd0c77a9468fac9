"""Seeded synthetic prices, classifier predictions and tweets.

Every generator uses ``numpy.random.PCG64``. Per-day streams are seeded with
``SeedSequence([seed, day.toordinal()])`` so any day can be regenerated on its
own and results do not depend on iteration order or worker count.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass
from typing import Literal, Mapping

import numpy as np

from .market_data import ONE_DAY, PriceSeries, to_day
from .signals import Prediction
from .text_pipeline import RawTweet
from .trend import Trend

RNG_ALGORITHM = "numpy.random.PCG64"
HIGH_LOW_CONVENTION = "high=max(open,close)*exp(|r|/2), low=min(open,close)*exp(-|r|/2), open=previous close"


def metadata() -> dict:
    return {"rng": RNG_ALGORITHM, "numpy": np.__version__, "high_low": HIGH_LOW_CONVENTION,
            "day_seed_rule": "SeedSequence([seed, day.toordinal()])"}


@dataclass(frozen=True)
class GbmParams:
    seed: int = 0
    drift: float = 0.0        # annualized, in log terms
    volatility: float = 0.6   # annualized
    days: int = 365
    start_price: float = 100.0
    start_date: dt.date = dt.date(2020, 1, 1)

    def __post_init__(self):
        if self.days < 2:
            raise ValueError("days must be >= 2")
        if self.volatility < 0:
            raise ValueError("volatility must be non-negative")
        if not self.start_price > 0:
            raise ValueError("start price must be positive")


@dataclass(frozen=True)
class SyntheticClassifierParams:
    seed: int = 0
    accuracy: float = 0.8
    tweets_per_day: int = 20
    error_model: Literal["uniform", "neutral_biased"] = "uniform"

    def __post_init__(self):
        if not 1.0 / 3.0 - 1e-12 <= self.accuracy <= 1.0:
            raise ValueError("accuracy must lie in [1/3, 1]")
        if self.tweets_per_day < 0:
            raise ValueError("tweets_per_day must be non-negative")
        if self.error_model not in ("uniform", "neutral_biased"):
            raise ValueError(f"unknown error model {self.error_model!r}")


def gen_gbm(params: GbmParams) -> PriceSeries:
    """Geometric Brownian motion closes with synthesized OHLC candles.

    Daily log increments are Gaussian with mean ``drift/365`` and standard
    deviation ``volatility/sqrt(365)``.
    """
    rng = np.random.Generator(np.random.PCG64(params.seed))
    z = rng.standard_normal(params.days - 1)
    r = params.drift / 365.0 + params.volatility / math.sqrt(365.0) * z
    close = params.start_price * np.exp(np.concatenate([[0.0], np.cumsum(r)]))
    open_ = np.concatenate([[close[0]], close[:-1]])
    half = np.exp(np.abs(np.concatenate([[0.0], r])) / 2.0)
    high = np.maximum(open_, close) * half
    low = np.minimum(open_, close) / half
    days = to_day(params.start_date) + np.arange(params.days) * ONE_DAY
    volume = np.full(params.days, 1000.0)
    return PriceSeries(days, open_, high, low, close, volume)


def day_rng(seed: int, day: dt.date) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, day.toordinal()])))


def _wrong_class(true: int, e: float, model: str) -> int:
    others = [c for c in (0, 1, 2) if c != true]
    if model == "neutral_biased" and true != int(Trend.NEUTRAL):
        return int(Trend.NEUTRAL) if e < 0.8 else 2 - true
    return others[min(1, int(e * 2))]


def gen_predictions(daily_labels: Mapping[dt.date, Trend],
                    params: SyntheticClassifierParams) -> list[Prediction]:
    """Synthetic per-tweet predictions of the day's label.

    Each tweet draws ``u`` and ``e`` from its day's stream: it is correct when
    ``u < accuracy`` and otherwise takes the wrong class chosen by ``e``. The
    draws do not depend on ``accuracy``, so for a fixed seed raising the
    accuracy only turns wrong predictions into right ones.
    """
    out = []
    for day in sorted(daily_labels):
        true = int(daily_labels[day])
        n = params.tweets_per_day
        if n == 0:
            continue
        rng = day_rng(params.seed, day)
        u = rng.random(n)
        e = rng.random(n)
        for i in range(n):
            cls = true if u[i] < params.accuracy else _wrong_class(true, e[i], params.error_model)
            out.append(Prediction(f"{day:%Y%m%d}-{i:03d}", day, Trend(cls)))
    return out


_PHRASES = {
    Trend.BULLISH: ["btc looking strong today", "bitcoin is on the rise!", "buying more sats, bullish",
                    "breakout incoming for $BTC", "new highs soon, hodling"],
    Trend.BEARISH: ["bitcoin dumping hard", "sold my btc, this looks weak", "bearish divergence on the daily",
                    "crash incoming?", "btc falling through support"],
    Trend.NEUTRAL: ["bitcoin moving sideways", "quiet day for crypto", "btc range bound again",
                    "waiting for a clear move", "no idea where bitcoin goes next"],
}
_DECOR = ["", " 🚀", " 📉", " https://t.co/abc123", " @cryptofriend", " #bitcoin", " #btc #crypto", " 🔥"]
_PROMO = "🔥 FREE AIRDROP claim now 🔥 https://t.co/spam"


def gen_tweets(predictions: list[Prediction], seed: int = 0, promo_rate: float = 0.02) -> list[RawTweet]:
    """Toy tweet texts keyed to prediction ids (phrasing follows the predicted class)."""
    out = []
    for p in predictions:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(
            [seed, p.day.toordinal(), int(p.tweet_id.rsplit("-", 1)[-1])])))
        if rng.random() < promo_rate:
            text = _PROMO
        else:
            phrases = _PHRASES[p.predicted]
            text = phrases[int(rng.integers(len(phrases)))] + _DECOR[int(rng.integers(len(_DECOR)))]
        out.append(RawTweet(p.tweet_id, p.day, text))
    return out
