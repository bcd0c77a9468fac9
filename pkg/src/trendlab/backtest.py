"""Single-asset strategy backtests driven by daily signals.

Execution model: a signal dated day d is acted on at the close of day d+1.
At most one position is open at a time. Trade P&L is expressed as a
fraction of the equity at entry, so the equity curve compounds trade by
trade. Fees are charged per side on traded notional.
"""

from __future__ import annotations

import datetime as dt
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Literal, NamedTuple, Sequence

import numpy as np

from ._io import fmt_float, write_csv, write_json
from .labeling import BarrierConfig, compute_barriers, first_touch
from .market_data import ONE_DAY, PriceSeries, VolatilitySeries, to_date
from .optimizer import SharpeParams, sharpe_ratio
from .signals import SignalSeries
from .trend import DataError, DegenerateError, Trend

log = logging.getLogger(__name__)

TRADE_HEADER = ("side", "entry_day", "entry_price", "exit_day", "exit_price", "size", "reason", "pnl")
EQUITY_HEADER = ("day", "equity")

Kind = Literal["TBL", "InOutLong", "InOutShort", "BuyHold", "SellHold"]
KINDS = ("TBL", "InOutLong", "InOutShort", "BuyHold", "SellHold")


@dataclass(frozen=True)
class StrategyConfig:
    kind: str = "InOutLong"
    barrier: BarrierConfig | None = None
    base_fraction: float = 1.0
    fee_rate: float = 0.0
    confidence_sizing: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if self.kind == "TBL" and self.barrier is None:
            raise ValueError("the TBL strategy needs a BarrierConfig")
        if not 0 < self.base_fraction <= 1:
            raise ValueError("base_fraction must lie in (0, 1]")
        if self.fee_rate < 0:
            raise ValueError("fee_rate must be non-negative")


@dataclass(frozen=True)
class Trade:
    side: str  # "long" | "short"
    entry_day: dt.date
    entry_price: float
    exit_day: dt.date
    exit_price: float
    size: float
    reason: str  # take_profit | stop_loss | time_limit | opposite_signal | end_of_data
    pnl: float

    @property
    def duration(self) -> int:
        return (self.exit_day - self.entry_day).days

    @property
    def price_return(self) -> float:
        r = self.exit_price / self.entry_price - 1.0
        return r if self.side == "long" else -r


@dataclass(frozen=True, eq=False)
class EquityCurve:
    days: np.ndarray
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.values)

    def daily_returns(self) -> np.ndarray:
        return self.values[1:] / self.values[:-1] - 1.0


class BacktestResult(NamedTuple):
    trades: list[Trade]
    equity: EquityCurve
    events: list[str]


@dataclass(frozen=True)
class PerformanceReport:
    daily_return_pct: float
    total_return_pct: float
    sharpe: float | None
    sortino: float | None
    closed_trades: int
    max_drawdown_pct: float
    profit_factor: float | None
    profit_factor_infinite: bool
    win_rate_pct: float | None
    avg_win_duration_days: float | None
    avg_loss_duration_days: float | None

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.profit_factor is not None and math.isinf(self.profit_factor):
            d["profit_factor"] = None
        return d


class _Position:
    __slots__ = ("side", "entry", "price", "size", "equity", "upper", "lower", "horizon")

    def __init__(self, side, entry, price, size, equity, upper=None, lower=None, horizon=None):
        self.side, self.entry, self.price, self.size, self.equity = side, entry, price, size, equity
        self.upper, self.lower, self.horizon = upper, lower, horizon

    def value(self, px: float, fee: float) -> float:
        r = px / self.price - 1.0
        signed = r if self.side == "long" else -r
        return self.equity * (1.0 - fee * self.size + self.size * signed)

    def close(self, px: float, fee: float) -> float:
        """P&L fraction after paying fees on both legs."""
        r = px / self.price - 1.0
        signed = r if self.side == "long" else -r
        return self.size * signed - fee * self.size * (1.0 + px / self.price)


def _aligned_signals(signals: SignalSeries, prices: PriceSeries) -> tuple[np.ndarray, np.ndarray]:
    """Signal code and confidence acted on at each price day's close.

    Entry t holds the signal of day t-1. The day before the first price day
    is optional (Neutral when absent); every later day must be present.
    """
    n = len(prices)
    first = to_date(prices.days[0])
    index = {a.day: a for a in signals.aggregates}
    sig = np.full(n, int(Trend.NEUTRAL), dtype=np.int64)
    conf = np.zeros(n)
    for t in range(n):
        day = first + dt.timedelta(days=t - 1)
        a = index.get(day)
        if a is None:
            if t == 0:
                continue
            raise DataError(f"calendar mismatch: no signal for {day}")
        sig[t] = int(a.signal)
        conf[t] = a.confidence
    return sig, conf


def _size(config: StrategyConfig, confidence: float) -> float:
    if config.confidence_sizing:
        return config.base_fraction * min(1.0, max(0.0, confidence))
    return config.base_fraction


def _run(signals: SignalSeries, prices: PriceSeries, config: StrategyConfig,
         vols: VolatilitySeries | None) -> BacktestResult:
    n = len(prices)
    if n < 2:
        raise DataError("backtests need at least two price days")
    sig, conf = _aligned_signals(signals, prices)
    opens, highs, lows, closes = (prices.open.tolist(), prices.high.tolist(),
                                  prices.low.tolist(), prices.close.tolist())
    sigma = None
    if config.kind == "TBL":
        if vols is None:
            raise ValueError("the TBL strategy needs a volatility series")
        off = int((prices.days[0] - vols.days[0]) // ONE_DAY)
        if off < 0 or off + n > len(vols):
            raise DataError("volatility series does not cover the price range")
        sigma = vols.sigma[off:off + n].tolist()
    fee = config.fee_rate
    days = [to_date(d) for d in prices.days]
    equity = np.empty(n)
    cash = 1.0
    pos: _Position | None = None
    trades: list[Trade] = []
    events: list[str] = []

    def close_out(t: int, px: float, reason: str) -> None:
        nonlocal cash, pos
        pnl = pos.close(px, fee)
        trades.append(Trade(pos.side, days[pos.entry], pos.price, days[t], px, pos.size, reason, pnl))
        cash = pos.equity * (1.0 + pnl)
        pos = None

    for t in range(n):
        # 1. barrier and time exits (TBL only)
        if pos is not None and config.kind == "TBL":
            held = t - pos.entry
            j, touched = first_touch(opens, highs, lows, pos.entry, pos.upper, pos.lower,
                                     held, held) if held >= config.barrier.min_trend_days else (None, None)
            if touched is Trend.BULLISH:
                close_out(t, pos.upper, "take_profit" if pos.side == "long" else "stop_loss")
            elif touched is Trend.BEARISH:
                close_out(t, pos.lower, "take_profit" if pos.side == "short" else "stop_loss")
            elif held >= pos.horizon:
                close_out(t, closes[t], "time_limit")
        # 2. signal-driven exits and entries at today's close
        s = sig[t]
        if pos is not None and config.kind in ("InOutLong", "InOutShort"):
            if (pos.side == "long" and s == Trend.BEARISH) or (pos.side == "short" and s == Trend.BULLISH):
                close_out(t, closes[t], "opposite_signal")
        if pos is None and t < n - 1 and s != Trend.NEUTRAL:
            side = None
            if config.kind == "InOutLong" and s == Trend.BULLISH:
                side = "long"
            elif config.kind == "InOutShort" and s == Trend.BEARISH:
                side = "short"
            elif config.kind == "TBL":
                side = "long" if s == Trend.BULLISH else "short"
            size = _size(config, conf[t]) if side else 0.0
            if side and size > 0.0:
                if config.kind == "TBL":
                    try:
                        if math.isnan(sigma[t]):
                            raise DegenerateError("volatility undefined")
                        upper, lower = compute_barriers(closes[t], sigma[t], config.barrier)
                    except DegenerateError as exc:
                        msg = f"{days[t]}: skipped {side} entry ({exc})"
                        log.warning(msg)
                        events.append(msg)
                    else:
                        pos = _Position(side, t, closes[t], size, cash, upper, lower,
                                        config.barrier.v_max)
                else:
                    pos = _Position(side, t, closes[t], size, cash)
        # 3. force-close on the last day
        if pos is not None and t == n - 1:
            close_out(t, closes[t], "end_of_data")
        equity[t] = cash if pos is None else pos.value(closes[t], fee)
    return BacktestResult(trades, EquityCurve(prices.days, equity), events)


def run_in_out(signals: SignalSeries, prices: PriceSeries, config: StrategyConfig) -> BacktestResult:
    """In/out strategy: enter on one signal class, exit on the opposite one."""
    if config.kind not in ("InOutLong", "InOutShort"):
        raise ValueError(f"run_in_out cannot run a {config.kind} strategy")
    return _run(signals, prices, config, None)


def run_tbl(signals: SignalSeries, prices: PriceSeries, vols: VolatilitySeries,
            config: StrategyConfig) -> BacktestResult:
    """Barrier strategy: each Bullish/Bearish signal opens a position with
    take-profit and stop-loss at the volatility barriers of the entry day and
    a time limit of ``v_max`` days. Barrier exits fill at the barrier price.
    """
    if config.kind != "TBL":
        raise ValueError(f"run_tbl cannot run a {config.kind} strategy")
    return _run(signals, prices, config, vols)


def run_hold(prices: PriceSeries, side: Literal["long", "short"] = "long") -> BacktestResult:
    if len(prices) < 2:
        raise DataError("hold benchmark needs at least two price days")
    if side not in ("long", "short"):
        raise ValueError(f"side must be 'long' or 'short', got {side!r}")
    close = prices.close
    r = close / close[0] - 1.0
    values = 1.0 + (r if side == "long" else -r)
    trade = Trade(side, to_date(prices.days[0]), float(close[0]), to_date(prices.days[-1]),
                  float(close[-1]), 1.0, "end_of_data", float(values[-1] - 1.0))
    return BacktestResult([trade], EquityCurve(prices.days, values), [])


def run_strategy(config: StrategyConfig, prices: PriceSeries, signals: SignalSeries | None = None,
                 vols: VolatilitySeries | None = None) -> BacktestResult:
    if config.kind == "BuyHold":
        return run_hold(prices, "long")
    if config.kind == "SellHold":
        return run_hold(prices, "short")
    if signals is None:
        raise ValueError(f"{config.kind} needs a signal series")
    if config.kind == "TBL":
        return run_tbl(signals, prices, vols, config)
    return run_in_out(signals, prices, config)


# --------------------------------------------------------------------------- metrics

def max_drawdown_pct(values: Sequence[float]) -> float:
    v = np.asarray(values, dtype=float)
    peak = np.maximum.accumulate(v)
    return float(np.max(1.0 - v / peak)) * 100.0


def sortino_ratio(returns: Sequence[float], params: SharpeParams = SharpeParams()) -> float:
    """Mean excess return over downside deviation, annualized.

    Downside deviation is the root-mean-square of the negative excess returns
    taken over the full sample length.
    """
    r = np.asarray(returns, dtype=float)
    if r.size < 1:
        raise DegenerateError("Sortino ratio needs returns")
    excess = r - params.risk_free_daily
    downside = math.sqrt(float(np.mean(np.minimum(excess, 0.0) ** 2)))
    if downside == 0.0:
        raise DegenerateError("no downside deviation")
    return float(np.mean(excess)) / downside * math.sqrt(params.days_per_year)


def profit_factor(pnls: Sequence[float]) -> float | None:
    """Gross profit over gross loss; inf without losers, None without trades."""
    if not len(pnls):
        return None
    gains = sum(p for p in pnls if p > 0)
    losses = -sum(p for p in pnls if p < 0)
    if losses == 0:
        return math.inf if gains > 0 else None
    return gains / losses


def performance(trades: Sequence[Trade], equity: EquityCurve,
                params: SharpeParams = SharpeParams()) -> PerformanceReport:
    if len(equity) < 2:
        raise DataError("performance needs at least two equity values")
    rets = equity.daily_returns()
    try:
        sharpe = sharpe_ratio(rets, params)
    except DegenerateError:
        sharpe = None
    try:
        sortino = sortino_ratio(rets, params)
    except DegenerateError:
        sortino = None
    pnls = [t.pnl for t in trades]
    pf = profit_factor(pnls)
    wins = [t for t in trades if t.pnl > 0]
    losses = [t for t in trades if t.pnl <= 0]
    return PerformanceReport(
        daily_return_pct=float(np.mean(rets)) * 100.0,
        total_return_pct=(float(equity.values[-1]) / float(equity.values[0]) - 1.0) * 100.0,
        sharpe=sharpe,
        sortino=sortino,
        closed_trades=len(trades),
        max_drawdown_pct=max_drawdown_pct(equity.values),
        profit_factor=pf,
        profit_factor_infinite=pf is not None and math.isinf(pf),
        win_rate_pct=100.0 * len(wins) / len(trades) if trades else None,
        avg_win_duration_days=float(np.mean([t.duration for t in wins])) if wins else None,
        avg_loss_duration_days=float(np.mean([t.duration for t in losses])) if losses else None,
    )


# --------------------------------------------------------------------------- file formats

def write_trades(trades: Sequence[Trade], path: str | Path) -> int:
    rows = ((t.side, t.entry_day.isoformat(), fmt_float(t.entry_price), t.exit_day.isoformat(),
             fmt_float(t.exit_price), fmt_float(t.size), t.reason, fmt_float(t.pnl)) for t in trades)
    return write_csv(path, TRADE_HEADER, rows)


def write_equity(equity: EquityCurve, path: str | Path) -> int:
    rows = ((str(d), fmt_float(v)) for d, v in zip(equity.days, equity.values))
    return write_csv(path, EQUITY_HEADER, rows)


def write_report(report: PerformanceReport, path: str | Path, extra: dict | None = None) -> None:
    d = report.to_dict()
    if extra:
        d.update(extra)
    write_json(path, d)
