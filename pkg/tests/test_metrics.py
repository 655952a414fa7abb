import numpy as np
import pytest

from fedsim import metrics
from fedsim.clients import ClientReturn
from fedsim.errors import ArgumentError
from fedsim.qp import QpProblem, solve_min_norm, uniform_weights


def ret(update):
    return ClientReturn(np.asarray(update, dtype=np.float64), 1.0, 0.5, 10)


def test_stats_all_equal():
    s = metrics.user_accuracy_stats([0.7] * 8)
    assert s == {"avg": 0.7, "std": 0.0, "worst5": 0.7, "best5": 0.7}


def test_stats_ceil_rule_at_twenty_users():
    values = np.arange(1, 21) * 0.05  # 0.05 .. 1.00
    s = metrics.user_accuracy_stats(values)
    assert s["worst5"] == pytest.approx(0.05)
    assert s["best5"] == pytest.approx(1.00)


def test_stats_match_direct_reimplementation(rng):
    acc = rng.uniform(size=37)
    s = metrics.user_accuracy_stats(acc)
    k = int(np.ceil(0.05 * 37))
    srt = np.sort(acc)
    assert s["avg"] == pytest.approx(float(np.mean(acc)), abs=1e-12)
    assert s["std"] == pytest.approx(
        float(np.sqrt(np.mean((acc - acc.mean()) ** 2))), abs=1e-12)
    assert s["worst5"] == pytest.approx(float(srt[:k].mean()), abs=1e-12)
    assert s["best5"] == pytest.approx(float(srt[-k:].mean()), abs=1e-12)


def test_stats_permutation_and_monotonicity(rng):
    acc = rng.uniform(size=15)
    s1 = metrics.user_accuracy_stats(acc)
    s2 = metrics.user_accuracy_stats(acc[rng.permutation(15)])
    assert s1 == s2
    better = metrics.user_accuracy_stats(np.minimum(acc + 0.05, 1.0))
    assert better["worst5"] >= s1["worst5"]
    assert better["best5"] >= s1["best5"]


def test_stats_reject_empty():
    with pytest.raises(ArgumentError):
        metrics.user_accuracy_stats([])


def test_pct_improved_counts_ties():
    before = {0: 1.0, 1: 2.0, 2: 3.0}
    after = {0: 0.9, 1: 2.0, 2: 3.1}
    assert metrics.pct_improved(before, after) == pytest.approx(2 / 3)


def test_pct_improved_edges():
    before = {0: 1.0, 1: 2.0}
    assert metrics.pct_improved(before, dict(before)) == 1.0
    worse = {u: v + 0.1 for u, v in before.items()}
    assert metrics.pct_improved(before, worse) == 0.0


def test_pct_improved_key_mismatch():
    with pytest.raises(ArgumentError):
        metrics.pct_improved({0: 1.0}, {1: 1.0})
    with pytest.raises(ArgumentError):
        metrics.pct_improved({}, {})


def test_pct_improved_order_invariant():
    before = {3: 1.0, 7: 2.0, 1: 0.5}
    after = {1: 0.4, 7: 2.5, 3: 1.0}
    assert metrics.pct_improved(before, after) == pytest.approx(2 / 3)


def test_residual_opposing_updates():
    returns = [ret([1.0, 0.0]), ret([-1.0, 0.0])]
    assert metrics.stationarity_residual(returns, normalize=False) <= 1e-12


def test_residual_single_update():
    g = np.array([0.6, -0.8, 0.0])
    assert metrics.stationarity_residual([ret(g)], normalize=False) == pytest.approx(
        float(np.dot(g, g)))
    assert metrics.stationarity_residual([ret(5 * g)], normalize=True) == pytest.approx(1.0)


def test_residual_matches_solver(rng):
    g = rng.standard_normal((4, 3))
    returns = [ret(row) for row in g]
    direct = solve_min_norm(QpProblem(g, uniform_weights(4), 1.0)).objective
    assert metrics.stationarity_residual(returns, normalize=False) == direct


def test_residual_scale_invariant_when_normalized(rng):
    g = rng.standard_normal((4, 3))
    scales = rng.uniform(0.5, 20.0, size=4)
    a = metrics.stationarity_residual([ret(row) for row in g], normalize=True)
    b = metrics.stationarity_residual([ret(s * row) for s, row in zip(scales, g)],
                                      normalize=True)
    assert a == pytest.approx(b, abs=1e-9)
