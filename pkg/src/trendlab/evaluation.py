"""Classification metrics: confusion matrix, one-vs-rest, one-vs-one, cross-entropy."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ._io import write_json
from .trend import DataError, Trend

CLASSES = (Trend.BEARISH, Trend.NEUTRAL, Trend.BULLISH)


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """3x3 counts; rows are true classes, columns predicted (Bearish, Neutral, Bullish)."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.array(self.counts, dtype=np.int64)
        if c.shape != (3, 3) or np.any(c < 0):
            raise ValueError("confusion matrix must be a non-negative 3x3 array")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __eq__(self, other) -> bool:
        return isinstance(other, ConfusionMatrix) and np.array_equal(self.counts, other.counts)


@dataclass(frozen=True)
class ClassMetrics:
    mode: str  # "OVR", "OVO+" or "OVO-"
    accuracy: float
    precision: float
    recall: float
    f1: float
    support: int
    degenerate: bool = False  # some precision/recall hit a zero denominator

    def to_dict(self, cross_entropy: float | None = None) -> dict:
        d = asdict(self)
        if cross_entropy is not None:
            d["cross_entropy"] = cross_entropy
        return d


def _codes(labels: Sequence) -> np.ndarray:
    return np.array([int(Trend.parse(x)) for x in labels], dtype=np.int64)


def align(true_by_key: Mapping, pred_by_key: Mapping) -> tuple[list[Trend], list[Trend]]:
    """Pair true and predicted labels by shared key (day or tweet id)."""
    missing = set(pred_by_key) - set(true_by_key)
    if missing:
        raise DataError(f"{len(missing)} prediction(s) have no matching truth, e.g. {sorted(missing, key=str)[0]}")
    keys = sorted(pred_by_key, key=str)
    return [true_by_key[k] for k in keys], [pred_by_key[k] for k in keys]


def confusion(true_labels: Sequence, predicted_labels: Sequence) -> ConfusionMatrix:
    if len(true_labels) != len(predicted_labels):
        raise DataError(f"length mismatch: {len(true_labels)} true vs {len(predicted_labels)} predicted")
    if len(true_labels) == 0:
        raise DataError("nothing to evaluate")
    t, p = _codes(true_labels), _codes(predicted_labels)
    m = np.zeros((3, 3), dtype=np.int64)
    np.add.at(m, (t, p), 1)
    return ConfusionMatrix(m)


def _ratio(num: float, den: float) -> tuple[float, bool]:
    return (num / den, False) if den > 0 else (0.0, True)


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p > 0 and r > 0 else 0.0


def ovr_metrics(cm: ConfusionMatrix) -> ClassMetrics:
    """Macro-averaged one-vs-rest precision/recall/F1 plus overall accuracy."""
    c = cm.counts
    total = cm.total
    if total == 0:
        raise DataError("empty confusion matrix")
    precisions, recalls, f1s, degenerate = [], [], [], False
    for k in range(3):
        tp = c[k, k]
        p, d1 = _ratio(tp, c[:, k].sum())
        r, d2 = _ratio(tp, c[k, :].sum())
        degenerate |= d1 or d2
        precisions.append(p)
        recalls.append(r)
        f1s.append(_f1(p, r))
    return ClassMetrics("OVR", float(np.trace(c)) / total, float(np.mean(precisions)),
                        float(np.mean(recalls)), float(np.mean(f1s)), total, degenerate)


def ovo_metrics(true_labels: Sequence, predicted_labels: Sequence, focus: Trend) -> ClassMetrics:
    """Bullish-vs-Bearish metrics on samples whose true label is Bullish or Bearish.

    ``focus`` is the positive class. Neutral predictions are wrong for either
    focus, so both focuses share one accuracy on the same restriction.
    """
    focus = Trend.parse(focus)
    if focus is Trend.NEUTRAL:
        raise ValueError("OVO focus must be Bullish or Bearish")
    if len(true_labels) != len(predicted_labels):
        raise DataError("length mismatch")
    t, p = _codes(true_labels), _codes(predicted_labels)
    keep = t != int(Trend.NEUTRAL)
    if not keep.any():
        raise DataError("no Bullish/Bearish samples to compare")
    t, p = t[keep], p[keep]
    pos = int(focus)
    tp = int(np.sum((t == pos) & (p == pos)))
    fp = int(np.sum((t != pos) & (p == pos)))
    n_pos = int(np.sum(t == pos))
    precision, d1 = _ratio(tp, tp + fp)
    recall, d2 = _ratio(tp, n_pos)
    mode = "OVO+" if focus is Trend.BULLISH else "OVO-"
    return ClassMetrics(mode, float(np.mean(t == p)), precision, recall, _f1(precision, recall),
                        int(t.size), d1 or d2)


def cross_entropy(prob_predictions: Sequence, true_labels: Sequence, floor: float = 1e-12) -> float:
    """Mean negative log-probability of the true class."""
    if len(prob_predictions) != len(true_labels):
        raise DataError("length mismatch")
    if len(true_labels) == 0:
        raise DataError("nothing to evaluate")
    if any(p is None for p in prob_predictions):
        raise DataError("cross-entropy needs a probability triple for every sample")
    probs = np.asarray(prob_predictions, dtype=float)
    if probs.shape != (len(true_labels), 3):
        raise DataError("probabilities must be triples")
    t = _codes(true_labels)
    picked = np.maximum(probs[np.arange(len(t)), t], floor)
    return float(-np.mean(np.log(picked)))


def evaluate(true_labels: Sequence, predicted_labels: Sequence, probs: Sequence | None = None) -> dict:
    """OVR plus both OVO reports in the metrics-report JSON layout."""
    cm = confusion(true_labels, predicted_labels)
    ce = None
    if probs is not None and all(p is not None for p in probs):
        ce = cross_entropy(probs, true_labels)
    out = {"confusion": cm.counts.tolist(), "reports": [ovr_metrics(cm).to_dict(ce)]}
    for focus in (Trend.BULLISH, Trend.BEARISH):
        try:
            out["reports"].append(ovo_metrics(true_labels, predicted_labels, focus).to_dict())
        except DataError:
            pass
    return out


def write_metrics(report: dict, path: str | Path) -> None:
    def clean(x):
        if isinstance(x, float) and not math.isfinite(x):
            return None
        if isinstance(x, dict):
            return {k: clean(v) for k, v in x.items()}
        if isinstance(x, list):
            return [clean(v) for v in x]
        return x
    write_json(path, clean(report))
