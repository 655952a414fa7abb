"""Fairness and performance statistics collected each round."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .clients import ClientReturn, normalize_update
from .errors import ArgumentError
from .qp import QpProblem, solve_min_norm, uniform_weights


@dataclass(frozen=True)
class RoundReport:
    """Per-round record: accuracy distribution over all users, uniformly
    averaged train loss, the fraction of participants whose loss did not
    increase, and the unconstrained min-norm residual of the round's
    updates.  wall_ms is pinned to 0 so output stays byte-deterministic.
    """

    round: int
    avg_test_acc: float
    std_test_acc: float
    worst5_acc: float
    best5_acc: float
    avg_train_loss: float
    pct_improved: float
    min_norm_objective: float
    participants: tuple[int, ...]
    wall_ms: int = 0


def user_accuracy_stats(accuracies) -> dict[str, float]:
    """Mean, population std, and the mean of the lowest / highest
    ceil(0.05 m) values (the single extreme user when m < 20)."""
    acc = np.asarray(accuracies, dtype=np.float64)
    if acc.ndim != 1 or acc.shape[0] < 1:
        raise ArgumentError("need a nonempty accuracy vector")
    k = -(-acc.shape[0] // 20)  # ceil(0.05 m)
    ordered = np.sort(acc)
    return {
        "avg": float(acc.mean()),
        "std": float(acc.std()),
        "worst5": float(ordered[:k].mean()),
        "best5": float(ordered[-k:].mean()),
    }


def pct_improved(before: Mapping[int, float], after: Mapping[int, float]) -> float:
    """Fraction of users whose loss did not increase (ties improve)."""
    if not before:
        raise ArgumentError("need at least one participant")
    if set(before) != set(after):
        raise ArgumentError("before/after key sets differ")
    hits = sum(1 for u in before if after[u] <= before[u])
    return hits / len(before)


def stationarity_residual(returns: list[ClientReturn], normalize: bool) -> float:
    """Unconstrained (epsilon = 1) min-norm objective over the round's
    updates; tends to zero as the model approaches Pareto stationarity."""
    if not returns:
        raise ArgumentError("need at least one client return")
    rows = np.stack([normalize_update(r.update) if normalize else r.update
                     for r in returns], axis=0)
    prob = QpProblem(rows, uniform_weights(rows.shape[0]), 1.0)
    return solve_min_norm(prob).objective
