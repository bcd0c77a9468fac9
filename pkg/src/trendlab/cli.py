"""Command-line entry point: ``trendlab <stage> [--config FILE] [--key value ...]``.

Stages hand off through files in ``out_dir`` so an external language model
can be slotted between ``prompts`` and ``aggregate``. Exit status is 0 on
success, 1 for configuration/usage errors, 2 for data errors and 3 for
internal invariant violations.
"""

from __future__ import annotations

import argparse
import datetime as dt
import hashlib
import logging
import os
import platform
import sys
import traceback
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from . import backtest as bt
from . import evaluation as ev
from . import labeling as lab
from . import market_data as md
from . import optimizer as opt
from . import signals as sg
from . import synthetic as syn
from . import text_pipeline as tp
from ._io import write_json
from .config import PATH_KEYS, RunConfig, as_dict
from .trend import ConfigError, DataError, DegenerateError, OptimizationError, Trend, TrendlabError

log = logging.getLogger("trendlab")

STAGES = ("label", "optimize", "prompts", "aggregate", "evaluate", "backtest", "synth", "pipeline")


class InvariantError(TrendlabError):
    """An internal consistency check failed."""


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


# --------------------------------------------------------------------------- helpers

def _sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _out(cfg: RunConfig, name: str) -> Path:
    return Path(cfg.out_dir) / name


def _require(cfg: RunConfig, *keys: str) -> None:
    missing = [k for k in keys if not getattr(cfg, k)]
    if missing:
        raise ConfigError(f"missing required setting(s): {', '.join('--' + k.replace('_', '-') for k in missing)}")
    for k in keys:
        if k in PATH_KEYS and k != "out_dir" and not Path(getattr(cfg, k)).exists():
            raise ConfigError(f"--{k.replace('_', '-')}: {getattr(cfg, k)} does not exist")


def _manifest(cfg: RunConfig, stage: str, inputs: dict[str, str | None], outputs: list[Path],
              extra: dict | None = None) -> None:
    man = {
        "stage": stage,
        "created": dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
        "inputs": {k: {"path": str(v), "sha256": _sha256(v)} for k, v in inputs.items() if v},
        "outputs": {p.name: _sha256(p) for p in outputs},
        "config_sha256": cfg.digest(),
        "config": as_dict(cfg),
        "seed": cfg.seed,
        "versions": {"trendlab": __version__, "numpy": np.__version__, "python": platform.python_version()},
    }
    if extra:
        man.update(extra)
    write_json(_out(cfg, f"manifest_{stage}.json"), man)


def _prices(cfg: RunConfig) -> md.PriceSeries:
    _require(cfg, "ohlcv")
    return md.load_ohlcv(cfg.ohlcv, fill_gaps="forward" if cfg.fill_gaps == "forward" else None)


def _market(cfg: RunConfig):
    prices = _prices(cfg)
    rets = md.log_returns(prices)
    vols = md.ewma_volatility(rets, cfg.ewma())
    return prices, rets, vols


def _check_tiling(labels: lab.LabelSeries) -> None:
    ws = labels.windows
    for a, b in zip(ws, ws[1:]):
        if a.end_day != b.start_day:
            raise InvariantError(f"label windows do not tile: {a.end_day} != {b.start_day}")
    for w in ws:
        if not w.start_day < w.end_day <= w.deadline:
            raise InvariantError(f"bad window bounds {w.start_day}..{w.end_day} (deadline {w.deadline})")


# --------------------------------------------------------------------------- stages

def stage_synth(cfg: RunConfig) -> dict:
    prices = syn.gen_gbm(cfg.gbm())
    vols = md.ewma_volatility(md.log_returns(prices), cfg.ewma())
    labels = lab.daily_labels(lab.label_series(prices, vols, cfg.barrier()))
    preds = syn.gen_predictions(labels, cfg.classifier())
    tweets = syn.gen_tweets(preds, cfg.seed)
    out = {"ohlcv": _out(cfg, "prices.csv"), "predictions": _out(cfg, "predictions.jsonl"),
           "tweets": _out(cfg, "tweets.jsonl")}
    md.write_ohlcv(prices, out["ohlcv"])
    sg.write_predictions(preds, out["predictions"])
    tp.write_tweets(tweets, out["tweets"])
    _manifest(cfg, "synth", {}, list(out.values()), {"synthetic": syn.metadata()})
    return {k: str(v) for k, v in out.items()}


def stage_label(cfg: RunConfig) -> dict:
    prices, _, vols = _market(cfg)
    labels = lab.label_series(prices, vols, cfg.barrier())
    _check_tiling(labels)
    out = {"windows": _out(cfg, "windows.csv"), "labels": _out(cfg, "daily_labels.csv")}
    lab.write_windows(labels, out["windows"])
    lab.write_daily_labels(lab.daily_labels(labels), out["labels"])
    _manifest(cfg, "label", {"ohlcv": cfg.ohlcv}, list(out.values()))
    return {k: str(v) for k, v in out.items()}


def stage_optimize(cfg: RunConfig) -> dict:
    prices, _, vols = _market(cfg)
    periods = opt.optimize_barriers(prices, vols, cfg.grid(), cfg.interval_months, cfg.sharpe(),
                                    cfg.min_trend_days, workers=cfg.threads)
    path = _out(cfg, "params.csv")
    opt.write_journal(periods, path)
    _manifest(cfg, "optimize", {"ohlcv": cfg.ohlcv}, [path])
    return {"params": str(path)}


def stage_prompts(cfg: RunConfig) -> dict:
    _require(cfg, "tweets")
    prices, rets, vols = _market(cfg)
    labels = lab.label_series(prices, vols, cfg.barrier())
    by_day = lab.daily_labels(labels)
    rsi = md.rsi(prices, cfg.rsi_period)
    roc = md.roc(prices, cfg.roc_period)
    schedule = md.roc_threshold_schedule(rets, md.to_date(prices.days[0]), md.to_date(prices.days[-1]),
                                         cfg.roc_window, cfg.roc_k, cfg.roc_period, cfg.interval_months)
    rsi_th = cfg.rsi_thresholds()
    records, skipped = [], {"dropped": 0, "unlabeled": 0, "no_context": 0}
    for raw in tp.load_tweets(cfg.tweets):
        clean = tp.preprocess_tweet(raw)
        if clean.dropped:
            skipped["dropped"] += 1
            continue
        label = by_day.get(clean.day)
        if label is None:
            skipped["unlabeled"] += 1
            continue
        ctx = None
        if cfg.mode != "CUA":
            roc_th = next((th for a, b, th in schedule if a <= clean.day <= b), None)
            if roc_th is None:
                skipped["no_context"] += 1
                continue
            try:
                ctx = tp.build_context(clean.day, labels, roc, rsi, roc_th, rsi_th)
            except tp.NoContextError:
                skipped["no_context"] += 1
                continue
        records.append(tp.render_prompt(ctx, clean, cfg.mode, label))
    path = _out(cfg, "prompts.jsonl")
    tp.export_dataset(records, path)
    _manifest(cfg, "prompts", {"ohlcv": cfg.ohlcv, "tweets": cfg.tweets}, [path], {"skipped": skipped})
    return {"prompts": str(path)}


def _load_predictions(cfg: RunConfig) -> list[sg.Prediction]:
    _require(cfg, "predictions")
    preds = sg.load_predictions(cfg.predictions)
    if not preds:
        raise DataError(f"{cfg.predictions}: no predictions")
    return sg.ensemble_folds(preds) if any(p.fold is not None for p in preds) else preds


def stage_aggregate(cfg: RunConfig) -> dict:
    preds = _load_predictions(cfg)
    prices = _prices(cfg) if cfg.ohlcv else None
    if prices is not None:
        first, last = md.to_date(prices.days[0]), md.to_date(prices.days[-1])
    else:
        first, last = min(p.day for p in preds), max(p.day for p in preds)
    thresholds = None
    extra = {}
    if cfg.method == "mean":
        if cfg.optimize_thresholds:
            if prices is None:
                raise ConfigError("threshold optimization needs --ohlcv")
            thresholds = sg.optimize_mean_thresholds(preds, prices, cfg.interval_months,
                                                     sharpe_params=cfg.sharpe())
            extra["thresholds"] = [
                {"t_bearish": t.t_bearish, "t_bullish": t.t_bullish,
                 "valid_from": t.valid_from.isoformat() if t.valid_from else None,
                 "valid_to": t.valid_to.isoformat() if t.valid_to else None} for t in thresholds]
        else:
            thresholds = sg.MeanThresholds(cfg.t_bearish, cfg.t_bullish)
    series = sg.build_signal_series(preds, first, last, cfg.method, thresholds)
    series = sg.normalize_confidence(series, cfg.norm_window)
    if any(not 0.0 <= a.confidence <= 1.0 for a in series.aggregates):
        raise InvariantError("normalized confidence left [0, 1]")
    path = _out(cfg, "signals.csv")
    sg.write_signals(series, path)
    _manifest(cfg, "aggregate", {"predictions": cfg.predictions, "ohlcv": cfg.ohlcv}, [path], extra)
    return {"signals": str(path)}


def _daily_truth(cfg: RunConfig) -> dict[dt.date, Trend]:
    if cfg.labels:
        _require(cfg, "labels")
        return lab.read_daily_labels(cfg.labels)
    prices, _, vols = _market(cfg)
    return lab.daily_labels(lab.label_series(prices, vols, cfg.barrier()))


def stage_evaluate(cfg: RunConfig) -> dict:
    preds = _load_predictions(cfg)
    truth = _daily_truth(cfg)
    matched = [p for p in preds if p.day in truth]
    if not matched:
        raise DataError("no prediction falls on a labeled day")
    report: dict = {"tweet_level": ev.evaluate([truth[p.day] for p in matched],
                                               [p.predicted for p in matched],
                                               [p.probs for p in matched])}
    report["tweet_level"]["unlabeled"] = len(preds) - len(matched)
    if cfg.signals:
        _require(cfg, "signals")
        series = sg.load_signals(cfg.signals)
        days = [a for a in series.aggregates if not a.empty and a.day in truth]
        if days:
            report["signal_level"] = ev.evaluate([truth[a.day] for a in days], [a.signal for a in days])
    path = _out(cfg, "metrics.json")
    ev.write_metrics(report, path)
    _manifest(cfg, "evaluate", {"predictions": cfg.predictions, "labels": cfg.labels,
                                "signals": cfg.signals, "ohlcv": cfg.ohlcv}, [path])
    return {"metrics": str(path)}


def _backtest_one(cfg: RunConfig, kind: str, prices, vols, series, suffix: str = "") -> tuple[dict, list[Path]]:
    strat = cfg.strategy_config(kind)
    res = bt.run_strategy(strat, prices, series, vols)
    # only long-only and barrier-bounded strategies have a hard floor at zero
    if kind in ("TBL", "InOutLong", "BuyHold") and np.any(res.equity.values <= 0):
        raise InvariantError(f"{kind}: equity curve is not strictly positive")
    report = bt.performance(res.trades, res.equity, cfg.sharpe())
    paths = [_out(cfg, f"trades{suffix}.csv"), _out(cfg, f"equity{suffix}.csv")]
    bt.write_trades(res.trades, paths[0])
    bt.write_equity(res.equity, paths[1])
    d = report.to_dict()
    d["strategy"] = kind
    if res.events:
        d["events"] = res.events
    return d, paths


def stage_backtest(cfg: RunConfig, kinds: tuple[str, ...] | None = None) -> dict:
    prices, _, vols = _market(cfg)
    kinds = kinds or (cfg.strategy,)
    series = None
    if any(k not in ("BuyHold", "SellHold") for k in kinds):
        _require(cfg, "signals")
        series = sg.load_signals(cfg.signals)
    reports, outputs = {}, []
    for kind in kinds:
        suffix = "" if len(kinds) == 1 else f"_{kind}"
        reports[kind], paths = _backtest_one(cfg, kind, prices, vols, series, suffix)
        outputs += paths
    path = _out(cfg, "report.json")
    write_json(path, reports[kinds[0]] if len(kinds) == 1 else {"strategies": reports})
    outputs.append(path)
    _manifest(cfg, "backtest", {"ohlcv": cfg.ohlcv, "signals": cfg.signals}, outputs)
    return {"report": str(path)}


def stage_pipeline(cfg: RunConfig) -> dict:
    done: dict = {}
    if not cfg.ohlcv:
        done.update(stage_synth(cfg))
        cfg.ohlcv, cfg.predictions, cfg.tweets = done["ohlcv"], done["predictions"], done["tweets"]
    done.update(stage_label(cfg))
    cfg.labels = done["labels"]
    done.update(stage_optimize(cfg))
    if cfg.tweets:
        done.update(stage_prompts(cfg))
    if cfg.predictions:
        done.update(stage_aggregate(cfg))
        cfg.signals = done["signals"]
        done.update(stage_evaluate(cfg))
        done.update(stage_backtest(cfg, bt.KINDS))
    else:
        done.update(stage_backtest(cfg, ("BuyHold", "SellHold")))
    return done


STAGE_FUNCS: dict[str, Callable[[RunConfig], dict]] = {
    "synth": stage_synth, "label": stage_label, "optimize": stage_optimize, "prompts": stage_prompts,
    "aggregate": stage_aggregate, "evaluate": stage_evaluate, "backtest": stage_backtest,
    "pipeline": stage_pipeline,
}

STAGE_HELP = {
    "label": "triple-barrier windows and daily labels from OHLCV",
    "optimize": "walk-forward grid search of barrier parameters",
    "prompts": "preprocess tweets and render CUA/CA/TCA prompt datasets",
    "aggregate": "aggregate per-tweet predictions into daily signals",
    "evaluate": "classification metrics of predictions/signals against labels",
    "backtest": "run a strategy on signals and write trades, equity and report",
    "synth": "generate synthetic prices, predictions and tweets",
    "pipeline": "run every stage in sequence from one config",
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="trendlab", description="Market-derived trend labels, signals and backtests.")
    parser.add_argument("--version", action="version", version=f"trendlab {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    for name in STAGES:
        p = sub.add_parser(name, help=STAGE_HELP[name], description=STAGE_HELP[name])
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--print-config", action="store_true", help="print the effective configuration and exit")
        for key in RunConfig.keys():
            p.add_argument("--" + key.replace("_", "-"), dest=key, metavar="VALUE", default=None)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    env_threads = os.environ.get("TRENDLAB_THREADS")
    if env_threads and args.threads is None:
        cfg.set("threads", env_threads)
    for key in RunConfig.keys():
        value = getattr(args, key, None)
        if value is not None:
            cfg.set(key, value)
    cfg.validate()
    return cfg


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_help(sys.stderr)
            return 1
        cfg = resolve_config(args)
        if args.print_config:
            sys.stdout.write(cfg.dump())
            return 0
        Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
        outputs = STAGE_FUNCS[args.command](cfg)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (DataError, DegenerateError, OptimizationError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # invariant violations and bugs alike get a diagnostic
        print(f"internal error: {exc}", file=sys.stderr)
        traceback.print_exc(file=sys.stderr)
        return 3
    for name, path in outputs.items():
        print(f"{name}: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
