"""Compare all strategies across bullish, bearish and sideways synthetic regimes.

Each regime is a GBM path with a different drift. Signals come from a
synthetic classifier of next-day labels at a fixed accuracy, aggregated by
majority vote with min-max confidence sizing.
"""

import argparse
import datetime as dt

import numpy as np

from trendlab.backtest import KINDS, StrategyConfig, performance, run_strategy
from trendlab.labeling import BarrierConfig, daily_labels, label_series
from trendlab.market_data import ewma_volatility, log_returns
from trendlab.signals import build_signal_series, normalize_confidence
from trendlab.synthetic import GbmParams, SyntheticClassifierParams, gen_gbm, gen_predictions

REGIMES = {"bullish": 1.0, "sideways": 0.0, "bearish": -1.0}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--accuracy", type=float, default=0.7)
    ap.add_argument("--fee", type=float, default=0.001)
    a = ap.parse_args()
    cfg = BarrierConfig(1.0, 1.0, 8)
    print(f"{'regime':<9}" + "".join(f"{k:>12}" for k in KINDS))
    for name, drift in REGIMES.items():
        sharpe = {k: [] for k in KINDS}
        for seed in range(a.seeds):
            ps = gen_gbm(GbmParams(seed=seed, days=365, drift=drift, volatility=0.6))
            vols = ewma_volatility(log_returns(ps))
            labels = daily_labels(label_series(ps, vols, cfg))
            target = {d - dt.timedelta(days=1): v for d, v in labels.items()}
            preds = gen_predictions(target, SyntheticClassifierParams(seed, a.accuracy, 10, "neutral_biased"))
            first = ps.days[0].astype(object) - dt.timedelta(days=1)
            sig = normalize_confidence(build_signal_series(preds, first, ps.days[-1].astype(object)))
            for kind in KINDS:
                strat = StrategyConfig(kind, cfg if kind == "TBL" else None, fee_rate=a.fee,
                                       confidence_sizing=kind not in ("BuyHold", "SellHold"))
                res = run_strategy(strat, ps, sig, vols)
                sharpe[kind].append(performance(res.trades, res.equity).sharpe or 0.0)
        print(f"{name:<9}" + "".join(f"{np.mean(sharpe[k]):>12.2f}" for k in KINDS))


if __name__ == "__main__":
    main()
