"""Daily OHLCV ingestion, log returns, EWMA volatility and the RSI/ROC indicators.

All series live on a dense daily calendar held as ``datetime64[D]`` arrays.
Undefined values (warmup, insufficient lookback) are stored as NaN so every
series can be indexed by the same day positions as its ``PriceSeries``.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from ._io import fmt_float, read_csv, write_csv
from .trend import DataError, DegenerateError, InsufficientHistoryError, Trend

OHLCV_HEADER = ("timestamp", "open", "high", "low", "close", "volume")
ONE_DAY = np.timedelta64(1, "D")


def to_day(value) -> np.datetime64:
    return np.datetime64(value, "D")


def to_date(day: np.datetime64) -> dt.date:
    return day.astype("datetime64[D]").astype(object)


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Candle:
    timestamp: dt.date
    open: float
    high: float
    low: float
    close: float
    volume: float


@dataclass(frozen=True, eq=False)
class PriceSeries:
    """Dense daily OHLCV candles; arrays are read-only after construction."""

    days: np.ndarray
    open: np.ndarray
    high: np.ndarray
    low: np.ndarray
    close: np.ndarray
    volume: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "days", _frozen(self.days, "datetime64[D]"))
        for name in ("open", "high", "low", "close", "volume"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        n = len(self.days)
        if any(len(getattr(self, k)) != n for k in ("open", "high", "low", "close", "volume")):
            raise DataError("OHLCV columns have different lengths")
        if n and np.any(np.diff(self.days) != ONE_DAY):
            raise DataError("price days must be strictly increasing with exactly one candle per day")
        bad = np.flatnonzero(
            (self.low > np.minimum(self.open, self.close))
            | (self.high < np.maximum(self.open, self.close))
            | (self.low > self.high)
            | (self.volume < 0)
        )
        if bad.size:
            raise DataError(f"OHLC inconsistency on {self.days[bad[0]]}")

    @classmethod
    def from_candles(cls, candles: list[Candle]) -> "PriceSeries":
        return cls(
            days=[to_day(c.timestamp) for c in candles],
            open=[c.open for c in candles],
            high=[c.high for c in candles],
            low=[c.low for c in candles],
            close=[c.close for c in candles],
            volume=[c.volume for c in candles],
        )

    @classmethod
    def from_closes(cls, closes, start="2020-01-01") -> "PriceSeries":
        """Candles whose open/high/low all equal the close. Handy in tests."""
        closes = np.asarray(closes, dtype=float)
        days = to_day(start) + np.arange(len(closes)) * ONE_DAY
        return cls(days, closes, closes, closes, closes, np.zeros(len(closes)))

    def __len__(self) -> int:
        return len(self.days)

    def candle(self, i: int) -> Candle:
        return Candle(to_date(self.days[i]), float(self.open[i]), float(self.high[i]),
                      float(self.low[i]), float(self.close[i]), float(self.volume[i]))

    def index_of(self, day) -> int:
        i = int((to_day(day) - self.days[0]) // ONE_DAY) if len(self) else -1
        if not 0 <= i < len(self):
            raise KeyError(f"{day} outside price range")
        return i

    def slice(self, start: int, stop: int) -> "PriceSeries":
        return PriceSeries(self.days[start:stop], self.open[start:stop], self.high[start:stop],
                           self.low[start:stop], self.close[start:stop], self.volume[start:stop])


@dataclass(frozen=True, eq=False)
class ReturnSeries:
    """Per-day returns aligned to the later day of each close pair."""

    days: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "days", _frozen(self.days, "datetime64[D]"))
        object.__setattr__(self, "values", _frozen(self.values))
        if len(self.days) != len(self.values):
            raise DataError("return days and values differ in length")

    def __len__(self) -> int:
        return len(self.values)

    def until(self, day) -> "ReturnSeries":
        """Returns dated strictly before ``day``."""
        mask = self.days < to_day(day)
        return ReturnSeries(self.days[mask], self.values[mask])


@dataclass(frozen=True)
class EwmaParams:
    tau: int = 30
    n_terms: int | None = None  # None means a window of exactly tau returns

    def __post_init__(self):
        if self.tau < 1:
            raise ValueError("tau must be a positive integer")
        if self.n_terms is not None and self.n_terms < 1:
            raise ValueError("n_terms must be positive")

    @property
    def alpha(self) -> float:
        return 2.0 / (self.tau + 1)

    @property
    def terms(self) -> int:
        return self.tau if self.n_terms is None else self.n_terms


@dataclass(frozen=True, eq=False)
class VolatilitySeries:
    """Sigma per price day; NaN for the first ``warmup`` days."""

    days: np.ndarray
    sigma: np.ndarray
    warmup: int

    def __post_init__(self):
        object.__setattr__(self, "days", _frozen(self.days, "datetime64[D]"))
        object.__setattr__(self, "sigma", _frozen(self.sigma))

    def __len__(self) -> int:
        return len(self.sigma)

    def at(self, day) -> float:
        i = int((to_day(day) - self.days[0]) // ONE_DAY)
        if not 0 <= i < len(self.sigma) or math.isnan(self.sigma[i]):
            raise KeyError(f"volatility undefined on {day}")
        return float(self.sigma[i])


@dataclass(frozen=True, eq=False)
class IndicatorSeries:
    name: Literal["RSI", "ROC"]
    period: int
    days: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "days", _frozen(self.days, "datetime64[D]"))
        object.__setattr__(self, "values", _frozen(self.values))

    def at(self, day) -> float:
        i = int((to_day(day) - self.days[0]) // ONE_DAY) if len(self.days) else -1
        if not 0 <= i < len(self.values) or math.isnan(self.values[i]):
            raise KeyError(f"{self.name} undefined on {day}")
        return float(self.values[i])


@dataclass(frozen=True)
class IndicatorThresholds:
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise DegenerateError(f"thresholds need lower < upper, got ({self.lower}, {self.upper})")


RSI_THRESHOLDS = IndicatorThresholds(30.0, 70.0)


# --------------------------------------------------------------------------- calendar

def half_year_intervals(first: dt.date, last: dt.date, months: int = 6) -> list[tuple[dt.date, dt.date, bool]]:
    """Calendar-aligned blocks overlapping [first, last] as (start, end, full) triples.

    ``full`` is True when the block lies entirely inside [first, last].
    """
    if 12 % months:
        raise ValueError("interval length must divide 12 months")
    out = []
    y, m = first.year, ((first.month - 1) // months) * months + 1
    while True:
        start = dt.date(y, m, 1)
        m2, y2 = m + months, y
        if m2 > 12:
            m2, y2 = m2 - 12, y + 1
        end = dt.date(y2, m2, 1) - dt.timedelta(days=1)
        if start > last:
            break
        out.append((start, end, start >= first and end <= last))
        y, m = y2, m2
    return out


def roc_threshold_schedule(returns: ReturnSeries, first: dt.date, last: dt.date, window: int = 180,
                           k: float = 1.0, period: int = 8,
                           interval_months: int = 6) -> list[tuple[dt.date, dt.date, IndicatorThresholds | None]]:
    """ROC thresholds per calendar block, each from the ``window`` returns before the block.

    Blocks without enough prior history (or with degenerate dispersion) map
    to None.
    """
    out = []
    for start, end, _ in half_year_intervals(first, last, interval_months):
        try:
            th = roc_thresholds(returns.until(start), window, k, period)
        except (InsufficientHistoryError, DegenerateError):
            th = None
        out.append((start, end, th))
    return out


# --------------------------------------------------------------------------- ingestion

def load_ohlcv(source: str | Path, fill_gaps: Literal["forward"] | None = None) -> PriceSeries:
    """Read an OHLCV CSV (header ``timestamp,open,high,low,close,volume``).

    Args:
        source: path to the CSV file.
        fill_gaps: ``None`` rejects missing calendar days; ``"forward"`` inserts
            candles at the previous close with zero volume.

    Raises:
        DataError: malformed rows (with line number), duplicate or
            non-increasing days, OHLC inconsistencies, or gaps.
    """
    if fill_gaps not in (None, "forward"):
        raise ValueError(f"unknown gap policy {fill_gaps!r}")
    rows = read_csv(source, OHLCV_HEADER)
    candles: list[Candle] = []
    prev_day = None
    for line_no, row in rows:
        where = f"{source}:{line_no}"
        try:
            day = dt.date.fromisoformat(row["timestamp"].strip())
            o, h, l, c, v = (float(row[k]) for k in OHLCV_HEADER[1:])
        except ValueError as exc:
            raise DataError(f"{where}: malformed row ({exc})") from None
        if not all(math.isfinite(x) for x in (o, h, l, c, v)):
            raise DataError(f"{where}: non-finite value")
        if h < l or l > min(o, c) or h < max(o, c):
            raise DataError(f"{where}: OHLC inconsistency (high={h}, low={l}, open={o}, close={c})")
        if v < 0:
            raise DataError(f"{where}: negative volume")
        if prev_day is not None:
            if day == prev_day:
                raise DataError(f"{where}: duplicate day {day}")
            if day < prev_day:
                raise DataError(f"{where}: non-monotonic timestamp {day} after {prev_day}")
            gap = (day - prev_day).days
            if gap > 1:
                if fill_gaps is None:
                    raise DataError(f"{where}: missing {gap - 1} day(s) before {day}")
                last = candles[-1].close
                for k in range(1, gap):
                    candles.append(Candle(prev_day + dt.timedelta(days=k), last, last, last, last, 0.0))
        candles.append(Candle(day, o, h, l, c, v))
        prev_day = day
    if not candles:
        raise DataError(f"{source}: no data rows")
    return PriceSeries.from_candles(candles)


def write_ohlcv(prices: PriceSeries, path: str | Path) -> int:
    rows = (
        (str(prices.days[i]), fmt_float(prices.open[i]), fmt_float(prices.high[i]),
         fmt_float(prices.low[i]), fmt_float(prices.close[i]), fmt_float(prices.volume[i]))
        for i in range(len(prices))
    )
    return write_csv(path, OHLCV_HEADER, rows)


# --------------------------------------------------------------------------- returns and volatility

def log_returns(prices: PriceSeries) -> ReturnSeries:
    if len(prices) < 2:
        raise InsufficientHistoryError("log returns need at least two closes")
    if np.any(prices.close <= 0):
        i = int(np.flatnonzero(prices.close <= 0)[0])
        raise DataError(f"non-positive close on {prices.days[i]}")
    return ReturnSeries(prices.days[1:], np.log(prices.close[1:] / prices.close[:-1]))


def ewma_volatility(returns: ReturnSeries, params: EwmaParams = EwmaParams()) -> VolatilitySeries:
    """Exponentially weighted (non-centred) standard deviation of log returns.

    The result is laid out on the price calendar: one value per price day,
    with the day preceding the first return included. Sigma on day t uses the
    ``params.terms`` most recent returns up to and including the one ending on
    t, weight ``(1 - alpha)**0`` on that latest return. The first ``tau`` price
    days are undefined (NaN).
    """
    n_terms = params.terms
    if len(returns) < max(params.tau, n_terms):
        raise InsufficientHistoryError(
            f"EWMA needs at least {max(params.tau, n_terms)} returns, got {len(returns)}")
    alpha = params.alpha
    decay = 1.0 - alpha
    norm = alpha / (1.0 - decay ** params.tau)
    weights = decay ** np.arange(n_terms)  # weights[0] hits the most recent return
    # 'valid' convolution: out[k] = sum_j weights[j] * r2[k + n_terms - 1 - j]
    var = norm * np.convolve(returns.values ** 2, weights, mode="valid")
    warmup = max(params.tau, n_terms)
    sigma = np.full(len(returns) + 1, np.nan)
    # return position k sits on price day k + 1
    sigma[n_terms:] = np.sqrt(var)
    sigma[:warmup] = np.nan
    days = np.concatenate([[returns.days[0] - ONE_DAY], returns.days])
    return VolatilitySeries(days, sigma, warmup)


# --------------------------------------------------------------------------- indicators

def rsi(prices: PriceSeries, period: int = 14) -> IndicatorSeries:
    """Wilder-smoothed Relative Strength Index."""
    close = prices.close
    if len(close) < period + 1:
        raise InsufficientHistoryError(f"RSI({period}) needs {period + 1} closes, got {len(close)}")
    delta = np.diff(close)
    gains = np.clip(delta, 0.0, None)
    losses = np.clip(-delta, 0.0, None)
    out = np.full(len(close), np.nan)
    avg_gain = gains[:period].mean()
    avg_loss = losses[:period].mean()
    out[period] = _rsi_value(avg_gain, avg_loss)
    for i in range(period, len(delta)):
        avg_gain = (avg_gain * (period - 1) + gains[i]) / period
        avg_loss = (avg_loss * (period - 1) + losses[i]) / period
        out[i + 1] = _rsi_value(avg_gain, avg_loss)
    return IndicatorSeries("RSI", period, prices.days, out)


def _rsi_value(avg_gain: float, avg_loss: float) -> float:
    if avg_loss == 0.0:
        return 100.0 if avg_gain > 0.0 else 50.0
    return 100.0 - 100.0 / (1.0 + avg_gain / avg_loss)


def roc(prices: PriceSeries, period: int = 8) -> IndicatorSeries:
    close = prices.close
    if len(close) < period + 1:
        raise InsufficientHistoryError(f"ROC({period}) needs {period + 1} closes, got {len(close)}")
    out = np.full(len(close), np.nan)
    out[period:] = (close[period:] - close[:-period]) / close[:-period]
    return IndicatorSeries("ROC", period, prices.days, out)


def roc_thresholds(returns: ReturnSeries, window: int = 180, k: float = 1.0,
                   period: int = 8) -> IndicatorThresholds:
    """Symmetric ROC thresholds ``(-k*s, +k*s)``.

    ``s`` is the sample standard deviation of the rolling ``period``-day
    compounded returns over the last ``window`` daily log returns.
    """
    if window < period + 1:
        raise ValueError(f"window must exceed the ROC period ({period})")
    if len(returns) < window:
        raise InsufficientHistoryError(f"ROC thresholds need {window} returns, got {len(returns)}")
    r = returns.values[-window:]
    csum = np.concatenate([[0.0], np.cumsum(r)])
    compounded = np.expm1(csum[period:] - csum[:-period])
    s = float(np.std(compounded, ddof=1))
    if not s > 0.0 or not math.isfinite(s):
        raise DegenerateError("ROC thresholds degenerate: zero dispersion of multi-day returns")
    return IndicatorThresholds(-k * s, k * s)


def discretize_indicator(value: float, kind: Literal["RSI", "ROC"],
                         thresholds: IndicatorThresholds) -> Trend:
    """Map an indicator value to a descriptive trend term.

    RSI reads as a reversal gauge (overbought is bearish); ROC as momentum.
    """
    if kind == "RSI":
        if value > thresholds.upper:
            return Trend.BEARISH
        if value < thresholds.lower:
            return Trend.BULLISH
        return Trend.NEUTRAL
    if kind == "ROC":
        if value > thresholds.upper:
            return Trend.BULLISH
        if value < thresholds.lower:
            return Trend.BEARISH
        return Trend.NEUTRAL
    raise ValueError(f"unknown indicator kind {kind!r}")
