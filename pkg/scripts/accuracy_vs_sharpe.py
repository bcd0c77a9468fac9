"""Mean TBL-strategy Sharpe as a function of synthetic classifier accuracy.

Two targets are compared: predictions of the label of the day they are dated
(``same-day``) and of the following day (``next-day``), which is the day a
signal is acted on. Usage::

    python scripts/accuracy_vs_sharpe.py --seeds 20 --tweets 5
"""

import argparse
import datetime as dt

import numpy as np
from scipy.stats import spearmanr

from trendlab.backtest import StrategyConfig, performance, run_tbl
from trendlab.labeling import BarrierConfig, daily_labels, label_series
from trendlab.market_data import ewma_volatility, log_returns
from trendlab.signals import build_signal_series
from trendlab.synthetic import GbmParams, SyntheticClassifierParams, gen_gbm, gen_predictions

ACCURACIES = (0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)


def run(seeds: int, tweets: int, cfg: BarrierConfig, days: int, error_model: str):
    strat = StrategyConfig("TBL", cfg)
    paths = []
    for seed in range(seeds):
        ps = gen_gbm(GbmParams(seed=seed, days=days))
        vols = ewma_volatility(log_returns(ps))
        labels = daily_labels(label_series(ps, vols, cfg))
        paths.append((ps, vols, labels))
    table = {}
    for target in ("same-day", "next-day"):
        row = []
        for acc in ACCURACIES:
            srs = []
            for seed, (ps, vols, labels) in enumerate(paths):
                if target == "next-day":
                    labels = {d - dt.timedelta(days=1): v for d, v in labels.items()}
                preds = gen_predictions(labels, SyntheticClassifierParams(seed, acc, tweets, error_model))
                first = ps.days[0].astype(object) - dt.timedelta(days=1)
                sig = build_signal_series(preds, first, ps.days[-1].astype(object))
                res = run_tbl(sig, ps, vols, strat)
                srs.append(performance(res.trades, res.equity).sharpe or 0.0)
            row.append(float(np.mean(srs)))
        table[target] = row
    return table


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--tweets", type=int, default=5)
    ap.add_argument("--days", type=int, default=365)
    ap.add_argument("--f-upper", type=float, default=1.0)
    ap.add_argument("--f-lower", type=float, default=1.0)
    ap.add_argument("--v-max", type=int, default=8)
    ap.add_argument("--error-model", default="uniform", choices=("uniform", "neutral_biased"))
    a = ap.parse_args()
    cfg = BarrierConfig(a.f_upper, a.f_lower, a.v_max)
    table = run(a.seeds, a.tweets, cfg, a.days, a.error_model)
    print("accuracy  " + "  ".join(f"{x:>6.1f}" for x in ACCURACIES) + "   spearman")
    for target, row in table.items():
        rho = spearmanr(ACCURACIES, row).statistic
        print(f"{target:<9} " + "  ".join(f"{x:>6.2f}" for x in row) + f"   {rho:>6.3f}")


if __name__ == "__main__":
    main()
