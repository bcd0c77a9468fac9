import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from trendlab.evaluation import ConfusionMatrix, confusion, cross_entropy, evaluate, ovo_metrics, ovr_metrics, write_metrics
from trendlab.trend import DataError, Trend

B, N, U = Trend.BEARISH, Trend.NEUTRAL, Trend.BULLISH

# 12-sample worked example, tallied by hand (rows true B/N/U, columns predicted B/N/U)
TRUE12 = [U, U, U, U, N, N, N, N, B, B, B, B]
PRED12 = [U, U, U, B, N, N, U, B, B, N, N, U]
CM12 = [[1, 2, 1], [1, 2, 1], [1, 0, 3]]


def test_confusion_worked_example():
    assert confusion(TRUE12, PRED12).counts.tolist() == CM12


def test_ovr_worked_example():
    m = ovr_metrics(confusion(TRUE12, PRED12))
    assert m.accuracy == 0.5
    assert m.precision == pytest.approx((1 / 3 + 1 / 2 + 3 / 5) / 3, abs=1e-15)
    assert m.recall == pytest.approx((1 / 4 + 1 / 2 + 3 / 4) / 3, abs=1e-15)
    assert m.f1 == pytest.approx((2 / 7 + 1 / 2 + 2 / 3) / 3, abs=1e-15)
    assert m.support == 12 and not m.degenerate


def test_perfect_and_degenerate_predictors():
    truth = [B, N, U] * 4
    cm = confusion(truth, truth)
    assert np.array_equal(cm.counts, np.diag([4, 4, 4]))
    m = ovr_metrics(cm)
    assert (m.accuracy, m.precision, m.recall, m.f1) == (1.0, 1.0, 1.0, 1.0)
    flat = confusion(truth, [N] * 12).counts
    assert flat[:, 1].tolist() == [4, 4, 4] and flat[:, [0, 2]].sum() == 0
    mf = ovr_metrics(ConfusionMatrix(flat))
    assert mf.degenerate and mf.precision == pytest.approx((0 + 1 / 3 + 0) / 3)


def test_confusion_errors():
    with pytest.raises(DataError):
        confusion([B], [B, N])
    with pytest.raises(DataError):
        confusion([], [])


def test_ovo_constructed_example():
    truth = [U] * 8 + [B] * 8 + [N] * 4
    pred = [U] * 5 + [N] * 2 + [B] + [B] * 4 + [N] + [U] * 3 + [U, B, N, N]
    pos = ovo_metrics(truth, pred, U)
    neg = ovo_metrics(truth, pred, B)
    assert (pos.precision, pos.recall) == (5 / 8, 5 / 8)
    assert (neg.precision, neg.recall) == (4 / 5, 4 / 8)
    assert pos.accuracy == neg.accuracy == 9 / 16
    assert pos.support == 16 and pos.mode == "OVO+" and neg.mode == "OVO-"


def test_ovo_simple_cases():
    p = ovo_metrics([U, B], [U, B], U)
    n = ovo_metrics([U, B], [U, B], B)
    assert p.accuracy == n.accuracy == 1.0
    z = ovo_metrics([U, B, U], [N, N, N], U)
    assert z.accuracy == 0.0 and z.recall == 0.0 and z.degenerate
    with pytest.raises(DataError):
        ovo_metrics([N, N], [U, B], U)
    with pytest.raises(ValueError):
        ovo_metrics([U], [U], N)


def test_cross_entropy():
    assert abs(cross_entropy([(1 / 3, 1 / 3, 1 / 3)] * 7, [B, N, U, B, N, U, B]) - math.log(3)) <= 1e-9
    assert cross_entropy([(0, 0, 1), (1, 0, 0)], [U, B]) == 0.0
    probs = [(0.7, 0.2, 0.1), (0.1, 0.3, 0.6), (0.0, 0.0, 1.0)]
    expect = (-math.log(0.7) - math.log(0.3) - math.log(1e-12)) / 3
    assert cross_entropy(probs, [B, N, B]) == pytest.approx(expect, rel=1e-14)
    with pytest.raises(DataError):
        cross_entropy([None], [B])


def test_uniform_predictor_accuracy():
    rng = np.random.default_rng(0)
    n = 100_000
    truth = np.repeat([0, 1, 2], n // 3 + 1)[:n]
    pred = rng.integers(0, 3, n)
    acc = ovr_metrics(confusion(truth, pred)).accuracy
    assert abs(acc - 1 / 3) <= 0.02


@given(st.lists(st.tuples(st.integers(0, 2), st.integers(0, 2)), min_size=2, max_size=60), st.randoms())
def test_metric_properties(pairs, rnd):
    t = [a for a, _ in pairs]
    p = [b for _, b in pairs]
    m = ovr_metrics(confusion(t, p))
    assert m.accuracy == sum(a == b for a, b in pairs) / len(pairs)
    shuffled = pairs[:]
    rnd.shuffle(shuffled)
    m2 = ovr_metrics(confusion([a for a, _ in shuffled], [b for _, b in shuffled]))
    assert m == m2
    for x in (m.precision, m.recall, m.f1):
        assert 0.0 <= x <= 1.0
    if any(a != 1 for a in t):
        assert ovo_metrics(t, p, U).accuracy == ovo_metrics(t, p, B).accuracy


def test_report_layout(tmp_path):
    rep = evaluate(TRUE12, PRED12, [(1 / 3, 1 / 3, 1 / 3)] * 12)
    assert rep["confusion"] == CM12
    assert [r["mode"] for r in rep["reports"]] == ["OVR", "OVO+", "OVO-"]
    assert rep["reports"][0]["cross_entropy"] == pytest.approx(math.log(3))
    write_metrics(rep, tmp_path / "m.json")
    assert (tmp_path / "m.json").read_text().startswith("{")
