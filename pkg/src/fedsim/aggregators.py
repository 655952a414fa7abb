"""Server-side aggregation strategies.

All aggregators consume the participating clients' returns and produce
the next global model as w <- w - eta_t * direction for some weighting
of the (optionally unit-normalized) client updates:

* fedmgda_plus: weights solve the box-constrained min-norm QP around
  the reference weighting; epsilon=0 reduces to plain averaging,
  epsilon=1 to the unconstrained min-norm direction.
* fedmgda:      fedmgda_plus with the box forced fully open (epsilon=1).
* mgda_prox:    fedmgda_plus; the proximal term lives client-side.
* fedavg:       fixed weights (uniform or sample-count proportional).
* fedavg_n:     fedavg over unit-normalized updates.
* fedprox:      fedavg; the proximal term lives client-side.
* qfedavg:      loss-weighted rule with the self-normalizing step from
                its defining scheme (no eta_t).
* afl:          projected gradient ascent on a loss-weighted adversary
                distribution, descent on the model; full participation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .clients import ClientReturn, normalize_update
from .core import ensure_finite
from .errors import ArgumentError, UnsupportedError
from .qp import QpProblem, project_box_simplex, solve_min_norm, uniform_weights

KINDS = ("fedmgda_plus", "fedmgda", "mgda_prox", "fedavg", "fedavg_n",
         "fedprox", "qfedavg", "afl")

# kinds whose natural configuration normalizes client updates
_NORMALIZING_KINDS = ("fedmgda_plus", "mgda_prox", "fedavg_n")


@dataclass(frozen=True)
class StepSchedule:
    """Linear step-size schedule: eta_t interpolates from ``initial`` down
    to ``initial * decay`` over the run; decay=0 means no decay."""

    initial: float
    decay: float = 0.0
    total_rounds: int = 1

    def __post_init__(self):
        if self.initial <= 0:
            raise ArgumentError("initial step size must be > 0")
        if not 0.0 <= self.decay <= 1.0:
            raise ArgumentError("decay must lie in [0, 1]")
        if self.total_rounds < 1:
            raise ArgumentError("total_rounds must be >= 1")


def step_size(schedule: StepSchedule, t: int) -> float:
    if not 0 <= t < schedule.total_rounds:
        raise ArgumentError(
            f"round {t} outside schedule of {schedule.total_rounds} rounds")
    final_multiplier = 1.0 if schedule.decay == 0.0 else schedule.decay
    if schedule.total_rounds == 1:
        return schedule.initial
    frac = t / (schedule.total_rounds - 1)
    return schedule.initial * (1.0 - (1.0 - final_multiplier) * frac)


@dataclass(frozen=True)
class AggregatorConfig:
    kind: str
    epsilon: float = 1.0
    lambda0: np.ndarray | None = None  # None = uniform over participants
    global_lr: StepSchedule = field(default_factory=lambda: StepSchedule(1.0))
    prox_mu: float = 0.0
    q: float = 0.0
    lipschitz: float = 1.0
    afl_lr_lambda: float = 0.1
    afl_lr_w: float = 0.01
    normalize: bool | None = None  # None = kind default
    weighting: str = "uniform"     # fedavg family: uniform | samples

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ArgumentError(f"unknown aggregator kind {self.kind!r}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ArgumentError("epsilon must lie in [0, 1]")
        if self.q < 0:
            raise ArgumentError("q must be >= 0")
        if self.kind == "qfedavg" and self.lipschitz <= 0:
            raise ArgumentError("qfedavg needs lipschitz > 0")
        if self.prox_mu < 0:
            raise ArgumentError("prox_mu must be >= 0")
        if self.weighting not in ("uniform", "samples"):
            raise ArgumentError(f"unknown weighting {self.weighting!r}")

    @property
    def normalizes(self) -> bool:
        if self.normalize is not None:
            return self.normalize
        return self.kind in _NORMALIZING_KINDS


@dataclass(frozen=True)
class ServerState:
    w: np.ndarray
    round: int = 0
    afl_lambda: np.ndarray | None = None  # over the full roster, afl only


def _stack_updates(returns: list[ClientReturn], normalize: bool) -> np.ndarray:
    if not returns:
        raise ArgumentError("aggregation needs at least one client return")
    rows = [normalize_update(r.update) if normalize else r.update for r in returns]
    return np.stack(rows, axis=0)


def _restricted_lambda0(cfg: AggregatorConfig, participants, m: int) -> np.ndarray:
    """Reference weighting over the participating subset, renormalized to
    sum 1 (the epsilon box is taken around the renormalized weights)."""
    if cfg.lambda0 is None:
        return uniform_weights(m)
    lam_full = np.asarray(cfg.lambda0, dtype=np.float64)
    if participants is None:
        if lam_full.shape[0] != m:
            raise ArgumentError("explicit lambda0 needs participant ids")
        sub = lam_full
    else:
        sub = lam_full[np.asarray(list(participants), dtype=np.intp)]
    total = float(sub.sum())
    if total <= 0:
        raise ArgumentError("lambda0 restricted to the participants sums to 0")
    return sub / total


def _descend(state: ServerState, direction: np.ndarray, eta: float) -> ServerState:
    w = ensure_finite(state.w - eta * direction, "server model")
    return replace(state, w=w, round=state.round + 1)


def aggregate_fedmgda_plus(state: ServerState, returns: list[ClientReturn],
                           cfg: AggregatorConfig, participants=None) -> ServerState:
    """Min-norm weighted step; also serves fedmgda (epsilon pinned to 1)
    and mgda_prox (identical server side)."""
    rows = _stack_updates(returns, cfg.normalizes)
    lam0 = _restricted_lambda0(cfg, participants, rows.shape[0])
    eps = 1.0 if cfg.kind == "fedmgda" else cfg.epsilon
    sol = solve_min_norm(QpProblem(rows, lam0, eps))
    return _descend(state, sol.direction, step_size(cfg.global_lr, state.round))


def aggregate_fedavg(state: ServerState, returns: list[ClientReturn],
                     cfg: AggregatorConfig, participants=None) -> ServerState:
    """Fixed-weight averaging; fedavg_n normalizes updates first, fedprox
    differs only client-side."""
    rows = _stack_updates(returns, cfg.normalizes or cfg.kind == "fedavg_n")
    if cfg.weighting == "samples":
        counts = np.array([r.sample_count for r in returns], dtype=np.float64)
        lam = counts / counts.sum()
    else:
        lam = uniform_weights(rows.shape[0])
    return _descend(state, lam @ rows, step_size(cfg.global_lr, state.round))


def aggregate_qfedavg(state: ServerState, returns: list[ClientReturn],
                      cfg: AggregatorConfig, participants=None) -> ServerState:
    """Loss-weighted rule: Delta_k = L g_k,
    w <- w - sum(F_k^q Delta_k) / sum(q F_k^(q-1) ||Delta_k||^2 + L F_k^q).

    Losses are shifted by +1e-10 so 0^(q-1) cannot occur.  q = 0 gives a
    uniform averaging step with unit global rate.
    """
    rows = _stack_updates(returns, False)
    L, q = cfg.lipschitz, cfg.q
    F = np.array([r.train_loss_before for r in returns], dtype=np.float64) + 1e-10
    if F.min() <= 0:
        raise ArgumentError("qfedavg needs nonnegative reported losses")
    deltas = L * rows
    fq = F ** q
    num = fq @ deltas
    den = float(np.sum(q * F ** (q - 1.0) * np.einsum("ij,ij->i", deltas, deltas)
                       + L * fq))
    if den == 0.0:
        warnings.warn("qfedavg: zero denominator, skipping round", RuntimeWarning)
        return replace(state, round=state.round + 1)
    return _descend(state, num / den, 1.0)


def aggregate_afl(state: ServerState, returns: list[ClientReturn],
                  cfg: AggregatorConfig, participants=None) -> ServerState:
    """Projected ascent on the adversary weighting, then a descent step
    under the new weights.  Requires full participation with the returns
    aligned to the roster behind state.afl_lambda."""
    if state.afl_lambda is None:
        raise ArgumentError("afl needs ServerState.afl_lambda initialized")
    m = state.afl_lambda.shape[0]
    if len(returns) != m:
        raise UnsupportedError(
            f"afl requires full participation ({len(returns)} returns for {m} users)")
    if participants is not None and list(participants) != list(range(m)):
        raise UnsupportedError("afl requires every user, in roster order")
    F = np.array([r.train_loss_before for r in returns], dtype=np.float64)
    lam = project_box_simplex(state.afl_lambda + cfg.afl_lr_lambda * F,
                              uniform_weights(m), 1.0)
    rows = _stack_updates(returns, False)
    w = ensure_finite(state.w - cfg.afl_lr_w * (lam @ rows), "server model")
    return replace(state, w=w, afl_lambda=lam, round=state.round + 1)


_DISPATCH = {
    "fedmgda_plus": aggregate_fedmgda_plus,
    "fedmgda": aggregate_fedmgda_plus,
    "mgda_prox": aggregate_fedmgda_plus,
    "fedavg": aggregate_fedavg,
    "fedavg_n": aggregate_fedavg,
    "fedprox": aggregate_fedavg,
    "qfedavg": aggregate_qfedavg,
    "afl": aggregate_afl,
}


def aggregate(state: ServerState, returns: list[ClientReturn],
              cfg: AggregatorConfig, participants=None) -> ServerState:
    """Apply one round of the configured aggregation strategy."""
    return _DISPATCH[cfg.kind](state, returns, cfg, participants)
