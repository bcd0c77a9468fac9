"""Triple-barrier trend labels over contiguous, non-overlapping windows."""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._io import fmt_float, read_csv, write_csv
from .market_data import ONE_DAY, PriceSeries, VolatilitySeries, to_date
from .trend import DataError, DegenerateError, Trend

WINDOWS_HEADER = ("start", "end", "deadline", "upper", "lower", "label", "touch_day", "truncated")
DAILY_HEADER = ("day", "label")


@dataclass(frozen=True)
class BarrierConfig:
    f_upper: float = 1.0
    f_lower: float = 1.0
    v_max: int = 8
    min_trend_days: int = 2

    def __post_init__(self):
        if not (self.f_upper > 0 and self.f_lower > 0):
            raise ValueError("barrier factors must be positive")
        if not 8 <= self.v_max <= 15:
            raise ValueError(f"v_max must lie in [8, 15], got {self.v_max}")
        if self.min_trend_days < 1:
            raise ValueError("min_trend_days must be >= 1")

    def key(self) -> tuple[float, float, int]:
        return (self.f_upper, self.f_lower, self.v_max)


@dataclass(frozen=True)
class BarrierWindow:
    start_day: dt.date
    end_day: dt.date
    upper: float
    lower: float
    deadline: dt.date
    label: Trend
    touch_day: dt.date | None
    truncated: bool = False
    start_index: int = 0
    end_index: int = 0

    @property
    def length(self) -> int:
        return self.end_index - self.start_index


@dataclass(frozen=True)
class LabelSeries:
    windows: tuple[BarrierWindow, ...]
    config: BarrierConfig

    def __len__(self) -> int:
        return len(self.windows)

    def __iter__(self):
        return iter(self.windows)

    def window_containing(self, day: dt.date) -> int:
        """Index of the window whose half-open [start, end) range holds ``day``."""
        for k, w in enumerate(self.windows):
            if w.start_day <= day < w.end_day:
                return k
        raise KeyError(f"{day} is not covered by any label window")


def compute_barriers(entry_close: float, sigma: float, config: BarrierConfig) -> tuple[float, float]:
    if not entry_close > 0:
        raise DataError("entry close must be positive")
    if sigma < 0:
        raise DataError("volatility must be non-negative")
    upper = entry_close * (1.0 + sigma * config.f_upper)
    lower = entry_close * (1.0 - sigma * config.f_lower)
    if sigma == 0.0:
        raise DegenerateError("zero volatility gives a zero-width barrier corridor")
    if lower <= 0.0:
        raise DegenerateError(f"lower barrier {lower} is not positive (sigma*f_lower too large)")
    return upper, lower


def first_touch(opens, highs, lows, start: int, upper: float, lower: float,
                horizon: int, min_days: int) -> tuple[int | None, Trend | None]:
    """Scan days ``start+min_days .. start+horizon`` for the first barrier touch.

    ``horizon`` must already be clipped to the available data. A day touching
    both barriers is resolved towards the one nearer that day's open (the lower
    barrier on an exact tie). Shared by the labeler and the TBL strategy so
    both read a path identically.
    """
    for j in range(start + max(1, min_days), start + horizon + 1):
        hit_up = highs[j] >= upper
        hit_dn = lows[j] <= lower
        if hit_up and hit_dn:
            o = opens[j]
            return j, (Trend.BULLISH if abs(o - upper) < abs(o - lower) else Trend.BEARISH)
        if hit_up:
            return j, Trend.BULLISH
        if hit_dn:
            return j, Trend.BEARISH
    return None, None


def _vol_offset(prices: PriceSeries, vols: VolatilitySeries) -> int:
    off = int((prices.days[0] - vols.days[0]) // ONE_DAY)
    if off < 0 or off + len(prices) > len(vols):
        raise DataError("volatility series does not cover the price range")
    return off


def label_series(prices: PriceSeries, vols: VolatilitySeries, config: BarrierConfig,
                 start: int | None = None) -> LabelSeries:
    """Label ``prices`` with sequential triple-barrier windows.

    Windows begin at ``start`` (default: first day with defined volatility)
    and tile the rest of the series. Barriers are fixed at each window start
    from that day's close and sigma; touches are tested on the high/low.
    Touches before ``start + min_trend_days`` are ignored. A final window that
    runs out of data before its deadline is emitted as Neutral and flagged
    ``truncated``.

    Raises:
        DegenerateError: a window start yields a degenerate corridor.
    """
    off = _vol_offset(prices, vols)
    sigma = vols.sigma[off:off + len(prices)]
    if start is None:
        defined = np.flatnonzero(~np.isnan(sigma))
        if defined.size == 0:
            raise DataError("volatility is undefined over the whole price range")
        start = int(defined[0])
    n = len(prices)
    opens, highs, lows, closes = (prices.open.tolist(), prices.high.tolist(),
                                  prices.low.tolist(), prices.close.tolist())
    sig = sigma.tolist()
    days = prices.days
    windows = []
    s = start
    while s < n - 1:
        if sig[s] != sig[s]:  # NaN
            raise DataError(f"volatility undefined at window start {days[s]}")
        upper, lower = compute_barriers(closes[s], sig[s], config)
        horizon = min(config.v_max, n - 1 - s)
        j, label = first_touch(opens, highs, lows, s, upper, lower, horizon, config.min_trend_days)
        truncated = False
        if j is None:
            label = Trend.NEUTRAL
            j = s + horizon
            truncated = horizon < config.v_max
            touch = None
        else:
            touch = to_date(days[j])
        windows.append(BarrierWindow(
            start_day=to_date(days[s]),
            end_day=to_date(days[j]),
            upper=upper,
            lower=lower,
            deadline=to_date(days[s] + config.v_max * ONE_DAY),
            label=label,
            touch_day=touch,
            truncated=truncated,
            start_index=s,
            end_index=j,
        ))
        s = j
    return LabelSeries(tuple(windows), config)


def daily_labels(series: LabelSeries) -> dict[dt.date, Trend]:
    """Map each day of every half-open window [start, end) to the window label."""
    out: dict[dt.date, Trend] = {}
    for w in series.windows:
        for k in range(w.length):
            out[w.start_day + dt.timedelta(days=k)] = w.label
    return out


def label_codes(series: LabelSeries, n_days: int) -> np.ndarray:
    """Per-price-day integer labels (-1 where no window covers the day)."""
    codes = np.full(n_days, -1, dtype=np.int64)
    for w in series.windows:
        codes[w.start_index:w.end_index] = int(w.label)
    return codes


# --------------------------------------------------------------------------- file formats

def write_windows(series: LabelSeries, path: str | Path) -> int:
    rows = (
        (w.start_day.isoformat(), w.end_day.isoformat(), w.deadline.isoformat(),
         fmt_float(w.upper), fmt_float(w.lower), w.label.term,
         w.touch_day.isoformat() if w.touch_day else "", "true" if w.truncated else "false")
        for w in series.windows
    )
    return write_csv(path, WINDOWS_HEADER, rows)


def write_daily_labels(labels: dict[dt.date, Trend], path: str | Path) -> int:
    rows = ((day.isoformat(), lab.term) for day, lab in sorted(labels.items()))
    return write_csv(path, DAILY_HEADER, rows)


def read_daily_labels(path: str | Path) -> dict[dt.date, Trend]:
    out = {}
    for line_no, row in read_csv(path, DAILY_HEADER):
        try:
            out[dt.date.fromisoformat(row["day"])] = Trend.parse(row["label"])
        except ValueError as exc:
            raise DataError(f"{path}:{line_no}: {exc}") from None
    return out
