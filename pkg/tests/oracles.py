"""Independent reference implementations used as test oracles.

Written as plain loops over Python floats with no code shared with the
package, so an agreement between the two is meaningful.
"""

import math
import statistics


def ewma_sigma(returns, tau, n_terms=None):
    """Per-day EWMA sigma; None until ``n_terms`` returns (incl. today) exist."""
    alpha = 2.0 / (tau + 1.0)
    n = n_terms or tau
    norm = alpha / (1.0 - (1.0 - alpha) ** n)
    out = []
    for t in range(len(returns)):
        if t + 1 < n:
            out.append(None)
            continue
        acc = math.fsum((1.0 - alpha) ** i * returns[t - i] ** 2 for i in range(n))
        out.append(math.sqrt(norm * acc))
    return out


def wilder_rsi(closes, period=14):
    """Textbook Wilder RSI, first defined at index ``period``."""
    out = [None] * len(closes)
    gains, losses = [], []
    for i in range(1, len(closes)):
        ch = closes[i] - closes[i - 1]
        gains.append(max(ch, 0.0))
        losses.append(max(-ch, 0.0))
    if len(gains) < period:
        return out
    ag = sum(gains[:period]) / period
    al = sum(losses[:period]) / period

    def value(g, l):
        if g == 0 and l == 0:
            return 50.0
        if l == 0:
            return 100.0
        return 100.0 - 100.0 / (1.0 + g / l)

    out[period] = value(ag, al)
    for i in range(period, len(gains)):
        ag = (ag * (period - 1) + gains[i]) / period
        al = (al * (period - 1) + losses[i]) / period
        out[i + 1] = value(ag, al)
    return out


def sample_std(xs):
    return statistics.stdev(xs)


def sharpe(returns, rf_annual=0.04, days=365):
    ex = [r - rf_annual / 365.0 for r in returns]
    return statistics.fmean(ex) / statistics.stdev(returns) * math.sqrt(days)


def label_windows(opens, highs, lows, closes, sigmas, fu, fl, vmax, min_days, start):
    """Forward-scan triple-barrier oracle.

    Returns a list of (start, end, label, touch) with label in
    {"bullish", "bearish", "neutral"} and touch an index or None.
    """
    n = len(closes)
    res = []
    s = start
    while s < n - 1:
        up = closes[s] * (1 + sigmas[s] * fu)
        dn = closes[s] * (1 - sigmas[s] * fl)
        last = min(s + vmax, n - 1)
        found = None
        d = s + 1
        while d <= last:
            if d - s >= min_days:
                u, l = highs[d] >= up, lows[d] <= dn
                if u and l:
                    found = (d, "bullish" if abs(opens[d] - up) < abs(opens[d] - dn) else "bearish")
                elif u:
                    found = (d, "bullish")
                elif l:
                    found = (d, "bearish")
                if found:
                    break
            d += 1
        if found:
            res.append((s, found[0], found[1], found[0]))
            s = found[0]
        else:
            res.append((s, last, "neutral", None))
            s = last
    return res


def plurality(labels):
    """Majority class by recount; ties between the top classes give 'neutral'."""
    counts = {c: labels.count(c) for c in ("bearish", "neutral", "bullish")}
    top = max(counts.values())
    winners = [c for c, k in counts.items() if k == top]
    return winners[0] if len(winners) == 1 else "neutral"


def mean_signal(codes, t_bear, t_bull):
    d = sum(codes) / len(codes)
    if d > t_bull:
        return "bullish", d - t_bull, d
    if d < t_bear:
        return "bearish", t_bear - d, d
    return "neutral", min(d - t_bear, t_bull - d), d


def label_strategy_sharpe(opens, highs, lows, closes, sigmas, fu, fl, vmax, min_days, start=0):
    """Sharpe of trading every oracle window in its label's direction."""
    ws = label_windows(opens, highs, lows, closes, sigmas, fu, fl, vmax, min_days, start)
    rets = [0.0] * (len(closes) - 1)
    for s, e, lab, _ in ws:
        sign = {"bullish": 1.0, "bearish": -1.0, "neutral": 0.0}[lab]
        for k in range(s + 1, e + 1):
            rets[k - 1] = sign * (closes[k] / closes[k - 1] - 1.0)
    return sharpe(rets[start:])
