"""Key=value run configuration shared by every CLI stage."""

from __future__ import annotations

import dataclasses
import datetime as dt
import hashlib
from dataclasses import dataclass, fields
from pathlib import Path

from .backtest import KINDS, StrategyConfig
from .labeling import BarrierConfig
from .market_data import EwmaParams, IndicatorThresholds
from .optimizer import OptimizationGrid, SharpeParams
from .synthetic import GbmParams, SyntheticClassifierParams
from .trend import ConfigError

PATH_KEYS = ("ohlcv", "tweets", "predictions", "labels", "signals", "out_dir")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_path(text: str) -> str | None:
    return text.strip() or None


@dataclass
class RunConfig:
    # paths
    ohlcv: str | None = None
    tweets: str | None = None
    predictions: str | None = None
    labels: str | None = None
    signals: str | None = None
    out_dir: str = "out"
    fill_gaps: str = "none"  # or "forward"
    # volatility and barriers
    tau: int = 30
    f_upper: float = 1.0
    f_lower: float = 1.0
    v_max: int = 8
    min_trend_days: int = 2
    # optimizer
    grid_f_upper: str = "0.5,0.75,1.0,1.25,1.5,1.75,2.0,2.25,2.5,2.75,3.0"
    grid_f_lower: str = "0.5,0.75,1.0,1.25,1.5,1.75,2.0,2.25,2.5,2.75,3.0"
    grid_v_max: str = "8,9,10,11,12,13,14,15"
    interval_months: int = 6
    risk_free_annual: float = 0.04
    days_per_year: int = 365
    # indicators and prompts
    rsi_period: int = 14
    rsi_lower: float = 30.0
    rsi_upper: float = 70.0
    roc_period: int = 8
    roc_window: int = 180
    roc_k: float = 1.0
    mode: str = "CA"
    # signals
    method: str = "majority"
    t_bearish: float = 0.8
    t_bullish: float = 1.2
    optimize_thresholds: bool = True
    norm_window: int = 180
    # backtest
    strategy: str = "TBL"
    base_fraction: float = 1.0
    fee_rate: float = 0.0
    confidence_sizing: bool = True
    # synthetic data
    seed: int = 0
    drift: float = 0.0
    volatility: float = 0.6
    days: int = 730
    start_price: float = 100.0
    start_date: str = "2020-01-01"
    accuracy: float = 0.8
    tweets_per_day: int = 10
    error_model: str = "neutral_biased"
    # runtime
    threads: int = 1

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def set(self, key: str, raw: str) -> None:
        """Assign ``key`` from its text form, converting by the field's default type."""
        key = key.strip().replace("-", "_")
        if key not in self.keys():
            raise ConfigError(f"unknown configuration key {key!r}")
        default = getattr(RunConfig, key, None)
        try:
            if key in PATH_KEYS:
                value = _opt_path(raw) if key != "out_dir" else raw.strip()
            elif isinstance(default, bool):
                value = _bool(raw)
            elif isinstance(default, int):
                value = int(raw)
            elif isinstance(default, float):
                value = float(raw)
            else:
                value = raw.strip()
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None
        setattr(self, key, value)

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file {path} not found")
        cfg = cls()
        base = path.resolve().parent
        for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{line_no}: expected key = value")
            key, raw = (s.strip() for s in line.split("=", 1))
            try:
                cfg.set(key, raw)
            except ConfigError as exc:
                raise ConfigError(f"{path}:{line_no}: {exc}") from None
            # paths in a config file are relative to the file
            if key in PATH_KEYS and getattr(cfg, key):
                p = Path(getattr(cfg, key))
                if not p.is_absolute():
                    setattr(cfg, key, str(base / p))
        return cfg

    def dump(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            lines.append(f"{f.name} = {'' if v is None else (str(v).lower() if isinstance(v, bool) else v)}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.dump().encode("utf-8")).hexdigest()

    # -- typed views ------------------------------------------------------------

    def validate(self) -> None:
        try:
            self.ewma(), self.barrier(), self.grid(), self.sharpe(), self.rsi_thresholds()
            self.strategy_config(), self.gbm(), self.classifier()
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from None
        if self.mode not in ("CUA", "CA", "TCA"):
            raise ConfigError(f"mode must be CUA, CA or TCA, got {self.mode!r}")
        if self.method not in ("majority", "mean"):
            raise ConfigError(f"method must be majority or mean, got {self.method!r}")
        if self.fill_gaps not in ("none", "forward"):
            raise ConfigError(f"fill_gaps must be none or forward, got {self.fill_gaps!r}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    def ewma(self) -> EwmaParams:
        return EwmaParams(self.tau)

    def barrier(self) -> BarrierConfig:
        return BarrierConfig(self.f_upper, self.f_lower, self.v_max, self.min_trend_days)

    def grid(self) -> OptimizationGrid:
        return OptimizationGrid(_floats(self.grid_f_upper), _floats(self.grid_f_lower), _ints(self.grid_v_max))

    def sharpe(self) -> SharpeParams:
        return SharpeParams(self.risk_free_annual, self.days_per_year)

    def rsi_thresholds(self) -> IndicatorThresholds:
        return IndicatorThresholds(self.rsi_lower, self.rsi_upper)

    def strategy_config(self, kind: str | None = None) -> StrategyConfig:
        kind = kind or self.strategy
        if kind not in KINDS:
            raise ValueError(f"strategy must be one of {', '.join(KINDS)}, got {kind!r}")
        return StrategyConfig(kind, self.barrier() if kind == "TBL" else None,
                              self.base_fraction, self.fee_rate, self.confidence_sizing)

    def gbm(self) -> GbmParams:
        return GbmParams(self.seed, self.drift, self.volatility, self.days, self.start_price,
                         dt.date.fromisoformat(self.start_date))

    def classifier(self) -> SyntheticClassifierParams:
        return SyntheticClassifierParams(self.seed, self.accuracy, self.tweets_per_day, self.error_model)


def as_dict(cfg: RunConfig) -> dict:
    return dataclasses.asdict(cfg)
