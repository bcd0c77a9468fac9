"""Walk-forward grid search of barrier parameters scored by the Sharpe ratio.

Intervals are calendar half-years (Jan-Jun, Jul-Dec) by default. Parameters
chosen on interval k are scheduled for interval k+1; a trailing partial
interval is never optimized and simply inherits the last full interval's
choice.
"""

from __future__ import annotations

import datetime as dt
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ._io import fmt_float, write_csv
from .labeling import BarrierConfig, LabelSeries, label_series
from .market_data import (ONE_DAY, PriceSeries, ReturnSeries, VolatilitySeries, half_year_intervals,
                          to_date)
from .trend import DataError, DegenerateError, OptimizationError, Trend

JOURNAL_HEADER = ("interval_start", "interval_end", "f_upper", "f_lower", "v_max", "sharpe")


@dataclass(frozen=True)
class SharpeParams:
    risk_free_annual: float = 0.04
    days_per_year: int = 365

    def __post_init__(self):
        if self.days_per_year <= 0:
            raise ValueError("days_per_year must be positive")

    @property
    def risk_free_daily(self) -> float:
        return self.risk_free_annual / 365.0


def _default_factors() -> tuple[float, ...]:
    return tuple(0.5 + 0.25 * i for i in range(11))


@dataclass(frozen=True)
class OptimizationGrid:
    f_upper: tuple[float, ...] = field(default_factory=_default_factors)
    f_lower: tuple[float, ...] = field(default_factory=_default_factors)
    v_max: tuple[int, ...] = tuple(range(8, 16))

    def __post_init__(self):
        for name in ("f_upper", "f_lower", "v_max"):
            vals = tuple(sorted(set(getattr(self, name))))
            if not vals:
                raise ValueError(f"grid axis {name} is empty")
            object.__setattr__(self, name, vals)
        if any(f <= 0 for f in self.f_upper + self.f_lower):
            raise ValueError("barrier factors must be positive")
        if any(not 8 <= v <= 15 for v in self.v_max):
            raise ValueError("v_max candidates must lie in [8, 15]")

    def __len__(self) -> int:
        return len(self.f_upper) * len(self.f_lower) * len(self.v_max)

    def configs(self, min_trend_days: int = 2) -> list[BarrierConfig]:
        """Grid points in lexicographic (f_upper, f_lower, v_max) order."""
        return [BarrierConfig(fu, fl, v, min_trend_days)
                for fu, fl, v in itertools.product(self.f_upper, self.f_lower, self.v_max)]


@dataclass(frozen=True)
class PeriodParams:
    interval_start: dt.date
    interval_end: dt.date  # inclusive
    config: BarrierConfig
    sharpe: float
    applies_from: dt.date | None = None
    applies_to: dt.date | None = None


def sharpe_ratio(returns: ReturnSeries | Sequence[float] | np.ndarray,
                 params: SharpeParams = SharpeParams()) -> float:
    """Annualized Sharpe ratio of daily returns.

    Mean daily excess return over the sample (n-1) standard deviation, scaled
    by ``sqrt(days_per_year)``. The daily risk-free rate is the annual rate
    over 365.
    """
    r = np.asarray(returns.values if isinstance(returns, ReturnSeries) else returns, dtype=float)
    if r.size < 2:
        raise DegenerateError("Sharpe ratio needs at least two returns")
    excess = r - params.risk_free_daily
    sd = float(np.std(r, ddof=1))
    if not sd > 0.0 or sd < 1e-15 * max(1.0, float(np.max(np.abs(r)))):
        raise DegenerateError("Sharpe ratio undefined for zero-variance returns")
    return float(np.mean(excess)) / sd * math.sqrt(params.days_per_year)


def label_strategy_returns(windows: LabelSeries, prices: PriceSeries) -> ReturnSeries:
    """Daily returns of trading every window in its label's direction.

    Long through Bullish windows, short through Bearish ones, flat otherwise;
    a window [s, e) is exposed to the close-to-close moves of days s+1..e.
    """
    close = prices.close
    simple = close[1:] / close[:-1] - 1.0
    side = np.zeros(len(simple))
    for w in windows.windows:
        if w.label is Trend.NEUTRAL:
            continue
        sign = 1.0 if w.label is Trend.BULLISH else -1.0
        # return position k covers price day k + 1
        side[w.start_index:w.end_index] = sign
    return ReturnSeries(prices.days[1:], side * simple)


def _score(args) -> tuple[float | None, BarrierConfig]:
    prices, vols, config, start, sharpe_params = args
    try:
        ls = label_series(prices, vols, config, start=start)
        rets = label_strategy_returns(ls, prices).values[start:]
        return sharpe_ratio(rets, sharpe_params), config
    except DegenerateError:
        return None, config


def best_config(prices: PriceSeries, vols: VolatilitySeries, configs: Sequence[BarrierConfig],
                start: int, sharpe_params: SharpeParams = SharpeParams(),
                workers: int = 1) -> tuple[BarrierConfig, float, list[float | None]]:
    """Exhaustively score ``configs`` on ``prices[start:]``; first maximum wins ties.

    Returns the winner, its Sharpe and every score in grid order (None where
    the grid point is degenerate).
    """
    jobs = [(prices, vols, c, start, sharpe_params) for c in configs]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_score, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_score(j) for j in jobs]
    scores = [s for s, _ in results]
    best, best_sr = None, -math.inf
    for s, c in results:  # fixed grid order: strict '>' keeps the lexicographically first
        if s is not None and s > best_sr:
            best, best_sr = c, s
    if best is None:
        raise OptimizationError("no valid grid point")
    return best, best_sr, scores


def optimize_barriers(prices: PriceSeries, vols: VolatilitySeries, grid: OptimizationGrid = OptimizationGrid(),
                      interval_months: int = 6, sharpe_params: SharpeParams = SharpeParams(),
                      min_trend_days: int = 2, workers: int = 1) -> list[PeriodParams]:
    """Choose the best barrier configuration for every full post-warmup interval.

    Each interval is labeled using only prices inside it (windows still open
    at the interval end are truncated), so the choice for interval k never
    sees data after k. ``applies_from``/``applies_to`` give the following
    interval, where the choice is meant to be used.
    """
    off = int((prices.days[0] - vols.days[0]) // ONE_DAY)
    if off < 0 or off + len(prices) > len(vols):
        raise DataError("volatility series does not cover the price range")
    sigma = vols.sigma[off:off + len(prices)]
    defined = np.flatnonzero(~np.isnan(sigma))
    if defined.size == 0:
        raise DataError("volatility undefined over the whole price range")
    first = to_date(prices.days[defined[0]])
    last = to_date(prices.days[-1])
    blocks = half_year_intervals(first, last, interval_months)
    full = [(a, b) for a, b, ok in blocks if ok]
    if not full:
        raise OptimizationError(f"no full {interval_months}-month interval between {first} and {last}")
    configs = grid.configs(min_trend_days)
    out = []
    for k, (a, b) in enumerate(full):
        i0, i1 = prices.index_of(a), prices.index_of(b)
        window = prices.slice(i0, i1 + 1)
        try:
            cfg, sr, _ = best_config(window, vols, configs, 0, sharpe_params, workers)
        except OptimizationError:
            raise OptimizationError(f"interval {a}..{b}: every grid point is degenerate") from None
        nxt = next(((s, e) for s, e, _ in blocks if s > b), None)
        out.append(PeriodParams(a, b, cfg, sr,
                                applies_from=nxt[0] if nxt else None,
                                applies_to=nxt[1] if nxt else None))
    return out


def config_for_day(periods: Sequence[PeriodParams], day: dt.date) -> BarrierConfig | None:
    """Walk-forward lookup: the configuration scheduled for ``day``.

    Days after the last scheduled interval reuse the latest choice; days
    before the first application have no configuration (None).
    """
    chosen = None
    for p in periods:
        if p.applies_from is not None and day >= p.applies_from:
            chosen = p.config
    if chosen is None and periods and day > periods[-1].interval_end:
        chosen = periods[-1].config
    return chosen


def write_journal(periods: Sequence[PeriodParams], path: str | Path) -> int:
    rows = ((p.interval_start.isoformat(), p.interval_end.isoformat(), fmt_float(p.config.f_upper),
             fmt_float(p.config.f_lower), str(p.config.v_max), fmt_float(p.sharpe)) for p in periods)
    return write_csv(path, JOURNAL_HEADER, rows)
