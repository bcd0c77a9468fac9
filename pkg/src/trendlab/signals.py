"""Daily trading signals from per-tweet class predictions.

Two aggregation rules are provided: the plurality (majority) vote, whose raw
confidence is the share of the winning class, and the mean of the class
encodings (Bearish=0, Neutral=1, Bullish=2) compared against a pair of
thresholds, whose raw confidence is the distance to the relevant threshold.
"""

from __future__ import annotations

import datetime as dt
import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Literal, Sequence

import numpy as np

from ._io import fmt_float, parse_float, read_csv, read_jsonl, write_csv, write_jsonl
from .market_data import PriceSeries, half_year_intervals
from .optimizer import SharpeParams, sharpe_ratio
from .trend import DataError, DegenerateError, OptimizationError, Trend

SIGNAL_HEADER = ("day", "method", "signal", "confidence_raw", "confidence",
                 "n_bearish", "n_neutral", "n_bullish", "d_mean")

Method = Literal["majority", "mean"]


@dataclass(frozen=True)
class Prediction:
    tweet_id: str
    day: dt.date
    predicted: Trend
    probs: tuple[float, float, float] | None = None
    fold: int | None = None

    def __post_init__(self):
        if self.probs is not None:
            p = tuple(float(x) for x in self.probs)
            if len(p) != 3 or min(p) < 0 or abs(sum(p) - 1.0) > 1e-6:
                raise DataError(f"tweet {self.tweet_id}: probabilities must be 3 non-negative values summing to 1")
            object.__setattr__(self, "probs", p)
        if self.fold is not None and not 0 <= self.fold <= 4:
            raise DataError(f"tweet {self.tweet_id}: fold must be in 0..4")


@dataclass(frozen=True)
class MeanThresholds:
    t_bearish: float
    t_bullish: float
    valid_from: dt.date | None = None
    valid_to: dt.date | None = None
    objective: float | None = None  # in-sample Sharpe that selected the pair

    def __post_init__(self):
        if not 0.0 <= self.t_bearish < self.t_bullish <= 2.0:
            raise ValueError(f"need 0 <= t_bearish < t_bullish <= 2, got ({self.t_bearish}, {self.t_bullish})")


@dataclass(frozen=True)
class DailyAggregate:
    day: dt.date
    counts: tuple[int, int, int]  # bearish, neutral, bullish
    signal: Trend
    confidence_raw: float
    confidence: float = 0.0
    mean_encoding: float | None = None

    @property
    def total(self) -> int:
        return sum(self.counts)

    @property
    def empty(self) -> bool:
        return self.total == 0


@dataclass(frozen=True)
class SignalSeries:
    method: str
    aggregates: tuple[DailyAggregate, ...]

    def __post_init__(self):
        days = [a.day for a in self.aggregates]
        if any((b - a).days != 1 for a, b in zip(days, days[1:])):
            raise DataError("signal series must cover a dense calendar")

    def __len__(self) -> int:
        return len(self.aggregates)

    @property
    def days(self) -> list[dt.date]:
        return [a.day for a in self.aggregates]

    def signals(self) -> np.ndarray:
        return np.array([int(a.signal) for a in self.aggregates], dtype=np.int64)

    def confidences(self) -> np.ndarray:
        return np.array([a.confidence for a in self.aggregates], dtype=float)


def _plurality(counts: Sequence[int]) -> Trend:
    top = max(counts)
    winners = [i for i, c in enumerate(counts) if c == top]
    return Trend(winners[0]) if len(winners) == 1 else Trend.NEUTRAL


def _count(preds: Iterable[Prediction]) -> tuple[int, int, int]:
    c = [0, 0, 0]
    for p in preds:
        c[int(p.predicted)] += 1
    return c[0], c[1], c[2]


def fold_ensemble(per_fold: Sequence[Prediction]) -> Prediction:
    """Plurality vote across fold models for one tweet (ties go to Neutral)."""
    if not 1 <= len(per_fold) <= 5:
        raise DataError(f"expected 1-5 fold predictions, got {len(per_fold)}")
    ids = {p.tweet_id for p in per_fold}
    if len(ids) != 1:
        raise DataError(f"fold predictions mix tweet ids {sorted(ids)}")
    first = per_fold[0]
    if len(per_fold) == 1:
        return replace(first, fold=None)
    probs = None
    if all(p.probs is not None for p in per_fold):
        probs = tuple(float(np.mean([p.probs[k] for p in per_fold])) for k in range(3))
        s = sum(probs)
        probs = tuple(x / s for x in probs)
    return Prediction(first.tweet_id, first.day, _plurality(_count(per_fold)), probs, None)


def ensemble_folds(predictions: Sequence[Prediction]) -> list[Prediction]:
    """Collapse fold-tagged predictions to one per tweet; order of first appearance kept."""
    groups: dict[str, list[Prediction]] = {}
    for p in predictions:
        groups.setdefault(p.tweet_id, []).append(p)
    return [fold_ensemble(g) for g in groups.values()]


def aggregate_majority(day_predictions: Sequence[Prediction]) -> DailyAggregate:
    if not day_predictions:
        raise DataError("majority aggregation needs at least one prediction")
    day = day_predictions[0].day
    if any(p.day != day for p in day_predictions):
        raise DataError("predictions span more than one day")
    counts = _count(day_predictions)
    signal = _plurality(counts)
    n = sum(counts)
    # a tie resolves to Neutral; its share is still the top count
    return DailyAggregate(day, counts, signal, max(counts) / n)


def _mean_signal(d_mean: float, th: MeanThresholds) -> tuple[Trend, float]:
    if d_mean < th.t_bearish:
        return Trend.BEARISH, abs(d_mean - th.t_bearish)
    if d_mean > th.t_bullish:
        return Trend.BULLISH, abs(d_mean - th.t_bullish)
    return Trend.NEUTRAL, min(abs(d_mean - th.t_bearish), abs(d_mean - th.t_bullish))


def aggregate_mean(day_predictions: Sequence[Prediction], thresholds: MeanThresholds) -> DailyAggregate:
    if not day_predictions:
        raise DataError("mean aggregation needs at least one prediction")
    day = day_predictions[0].day
    if any(p.day != day for p in day_predictions):
        raise DataError("predictions span more than one day")
    counts = _count(day_predictions)
    n = sum(counts)
    d_mean = (counts[1] + 2 * counts[2]) / n
    signal, conf = _mean_signal(d_mean, thresholds)
    return DailyAggregate(day, counts, signal, conf, mean_encoding=d_mean)


def group_by_day(predictions: Iterable[Prediction]) -> dict[dt.date, list[Prediction]]:
    out: dict[dt.date, list[Prediction]] = defaultdict(list)
    for p in predictions:
        out[p.day].append(p)
    return dict(out)


def build_signal_series(predictions: Sequence[Prediction], first: dt.date, last: dt.date,
                        method: Method = "majority",
                        thresholds: MeanThresholds | Sequence[MeanThresholds] | None = None) -> SignalSeries:
    """Aggregate predictions into one aggregate per calendar day in [first, last].

    Days without predictions are Neutral with zero confidence. For the mean
    method ``thresholds`` is either one pair for the whole range or a schedule
    of pairs with ``valid_from``/``valid_to`` bounds; days no scheduled pair
    covers are emitted as empty Neutral days.
    """
    by_day = group_by_day(predictions)
    schedule: list[MeanThresholds] = []
    if method == "mean":
        if thresholds is None:
            raise ValueError("mean aggregation requires thresholds")
        schedule = [thresholds] if isinstance(thresholds, MeanThresholds) else list(thresholds)
    elif method != "majority":
        raise ValueError(f"unknown aggregation method {method!r}")
    aggs = []
    day = first
    while day <= last:
        preds = by_day.get(day)
        agg = None
        if preds:
            if method == "majority":
                agg = aggregate_majority(preds)
            else:
                th = _thresholds_for(schedule, day)
                if th is not None:
                    agg = aggregate_mean(preds, th)
        if agg is None:
            agg = DailyAggregate(day, _count(preds or ()), Trend.NEUTRAL, 0.0)
            if preds and method == "mean":
                # no thresholds in force: keep the counts but take no position
                agg = replace(agg, mean_encoding=(agg.counts[1] + 2 * agg.counts[2]) / agg.total)
        aggs.append(agg)
        day += dt.timedelta(days=1)
    return SignalSeries(method, tuple(aggs))


def _thresholds_for(schedule: Sequence[MeanThresholds], day: dt.date) -> MeanThresholds | None:
    for th in schedule:
        if (th.valid_from is None or day >= th.valid_from) and (th.valid_to is None or day <= th.valid_to):
            return th
    return None


def normalize_confidence(series: SignalSeries, window: int = 180) -> SignalSeries:
    """Min-max scale raw confidences against the trailing ``window`` days.

    The reference window ends on the prior day and only counts days that had
    predictions. Fewer than two such days, or a flat window, give 0.5. Days
    without predictions keep confidence 0.
    """
    if window < 2:
        raise ValueError("normalization window must be >= 2 days")
    raw = [a.confidence_raw for a in series.aggregates]
    observed = [not a.empty for a in series.aggregates]
    out = []
    for i, agg in enumerate(series.aggregates):
        if agg.empty:
            out.append(replace(agg, confidence=0.0))
            continue
        lo = max(0, i - window)
        hist = [raw[j] for j in range(lo, i) if observed[j]]
        if len(hist) < 2:
            conf = 0.5
        else:
            mn, mx = min(hist), max(hist)
            conf = 0.5 if mx == mn else min(1.0, max(0.0, (agg.confidence_raw - mn) / (mx - mn)))
        out.append(replace(agg, confidence=conf))
    return SignalSeries(series.method, tuple(out))


# --------------------------------------------------------------------------- threshold optimization

def default_threshold_grid() -> list[tuple[float, float]]:
    ts = [round(0.6 + 0.05 * i, 10) for i in range(17)]
    return [(a, b) for a, b in itertools.combinations(ts, 2)]


def in_out_long_returns(signals: np.ndarray, close: np.ndarray) -> np.ndarray:
    """Daily returns of an unsized long in/out rule, executed at the next close.

    ``signals[t]`` is the signal of day t; the position held over the move into
    day t+1 is decided by signals up to day t-1. Mirrors ``backtest.run_in_out``
    with sizing off and no fees, used as the threshold objective.
    """
    n = len(close)
    held = np.zeros(n - 1)
    pos = False
    for t in range(1, n - 1):
        s = signals[t - 1]
        if not pos and s == Trend.BULLISH:
            pos = True
        elif pos and s == Trend.BEARISH:
            pos = False
        # return position t is the move from close t to close t+1
        held[t] = 1.0 if pos else 0.0
    return held * (close[1:] / close[:-1] - 1.0)


def optimize_mean_thresholds(predictions: Sequence[Prediction], prices: PriceSeries,
                             interval_months: int = 6,
                             grid: Sequence[tuple[float, float]] | None = None,
                             sharpe_params: SharpeParams = SharpeParams()) -> list[MeanThresholds]:
    """Pick (t_bearish, t_bullish) per full calendar interval, walk-forward.

    Each pair is scored by the Sharpe ratio of the long in/out rule driven by
    the mean-method signals on that interval. The pair chosen on interval k
    is returned with validity over interval k+1 (the last choice also covers
    any trailing partial interval). Ties go to the lexicographically first
    pair.
    """
    grid = sorted(grid if grid is not None else default_threshold_grid())
    if not grid:
        raise ValueError("empty threshold grid")
    by_day = group_by_day(predictions)
    first = prices.days[0].astype(object)
    last = prices.days[-1].astype(object)
    blocks = half_year_intervals(first, last, interval_months)
    full = [(a, b) for a, b, ok in blocks if ok]
    if not full:
        raise OptimizationError("no full interval of predictions and prices")
    out = []
    for k, (a, b) in enumerate(full):
        i0, i1 = prices.index_of(a), prices.index_of(b)
        close = prices.close[i0:i1 + 1]
        d_mean = np.full(i1 - i0 + 1, np.nan)
        for j in range(i1 - i0 + 1):
            preds = by_day.get(a + dt.timedelta(days=j))
            if preds:
                c = _count(preds)
                d_mean[j] = (c[1] + 2 * c[2]) / sum(c)
        best, best_sr = None, -math.inf
        for tb, tu in grid:
            sig = np.full(len(d_mean), int(Trend.NEUTRAL))
            sig[d_mean < tb] = int(Trend.BEARISH)
            sig[d_mean > tu] = int(Trend.BULLISH)
            try:
                sr = sharpe_ratio(in_out_long_returns(sig, close), sharpe_params)
            except DegenerateError:
                continue
            if sr > best_sr:
                best, best_sr = (tb, tu), sr
        if best is None:
            raise OptimizationError(f"interval {a}..{b}: no threshold pair yields a defined Sharpe ratio")
        nxt = next(((s, e) for s, e, _ in blocks if s > b), None)
        last_choice = k == len(full) - 1
        valid_from = nxt[0] if nxt else None
        valid_to = None if last_choice else (nxt[1] if nxt else None)
        out.append(MeanThresholds(best[0], best[1], valid_from, valid_to, objective=best_sr))
    return out


# --------------------------------------------------------------------------- file formats

def load_predictions(path: str | Path) -> list[Prediction]:
    out = []
    for line_no, obj in read_jsonl(path):
        try:
            probs = obj.get("probs")
            out.append(Prediction(
                tweet_id=str(obj["tweet_id"]),
                day=dt.date.fromisoformat(str(obj["day"])[:10]),
                predicted=Trend.parse(obj["class"]),
                probs=tuple(probs) if probs is not None else None,
                fold=int(obj["fold"]) if obj.get("fold") is not None else None,
            ))
        except (KeyError, ValueError, TypeError) as exc:
            raise DataError(f"{path}:{line_no}: bad prediction record ({exc})") from None
    return out


def write_predictions(predictions: Iterable[Prediction], path: str | Path) -> int:
    def rec(p: Prediction) -> dict:
        d = {"tweet_id": p.tweet_id, "day": p.day.isoformat(), "class": p.predicted.term}
        if p.probs is not None:
            d["probs"] = list(p.probs)
        if p.fold is not None:
            d["fold"] = p.fold
        return d
    return write_jsonl(path, (rec(p) for p in predictions))


def write_signals(series: SignalSeries, path: str | Path) -> int:
    rows = ((a.day.isoformat(), series.method, a.signal.term, fmt_float(a.confidence_raw),
             fmt_float(a.confidence), a.counts[0], a.counts[1], a.counts[2], fmt_float(a.mean_encoding))
            for a in series.aggregates)
    return write_csv(path, SIGNAL_HEADER, rows)


def load_signals(path: str | Path) -> SignalSeries:
    aggs, method = [], None
    for line_no, row in read_csv(path, SIGNAL_HEADER):
        try:
            counts = (int(row["n_bearish"]), int(row["n_neutral"]), int(row["n_bullish"]))
            aggs.append(DailyAggregate(
                day=dt.date.fromisoformat(row["day"]),
                counts=counts,
                signal=Trend.parse(row["signal"]),
                confidence_raw=float(row["confidence_raw"]),
                confidence=float(row["confidence"]),
                mean_encoding=parse_float(row["d_mean"]),
            ))
        except ValueError as exc:
            raise DataError(f"{path}:{line_no}: {exc}") from None
        if method is None:
            method = row["method"]
        elif row["method"] != method:
            raise DataError(f"{path}:{line_no}: mixed aggregation methods")
    if not aggs:
        raise DataError(f"{path}: no signal rows")
    return SignalSeries(method, tuple(aggs))
