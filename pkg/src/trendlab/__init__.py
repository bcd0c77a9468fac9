"""Triple-barrier trend labels, tweet-signal aggregation and backtesting."""

__version__ = "0.1.0"

from .trend import (ConfigError, DataError, DegenerateError, InsufficientHistoryError, OptimizationError,
                    Trend, TrendlabError)
from .market_data import (EwmaParams, IndicatorSeries, IndicatorThresholds, PriceSeries, ReturnSeries,
                          VolatilitySeries, ewma_volatility, load_ohlcv, log_returns, roc, rsi)
from .labeling import BarrierConfig, BarrierWindow, LabelSeries, compute_barriers, daily_labels, label_series
from .optimizer import OptimizationGrid, PeriodParams, SharpeParams, optimize_barriers, sharpe_ratio
from .signals import (DailyAggregate, MeanThresholds, Prediction, SignalSeries, aggregate_majority,
                      aggregate_mean, build_signal_series, normalize_confidence)
from .evaluation import ConfusionMatrix, cross_entropy, evaluate, ovo_metrics, ovr_metrics
from .backtest import (BacktestResult, EquityCurve, PerformanceReport, StrategyConfig, Trade, performance,
                       run_strategy)
from .synthetic import GbmParams, SyntheticClassifierParams, gen_gbm, gen_predictions

__all__ = [name for name in dir() if not name.startswith("_")]
