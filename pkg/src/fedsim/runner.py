"""Experiment orchestration: build the federated split, loop rounds of
sample / local-update / aggregate / measure, and persist per-round
metrics as CSV.

Round t's report row holds the accuracy and loss statistics of the
model *after* the round's server step, the fraction of round-t
participants whose (true) train loss did not increase across the step,
and the min-norm residual of the updates gathered at the round's start.

Everything is deterministic given the config: data, participant
sampling, and client batching draw from separate seed-derived streams,
and client results are merged in canonical user-id order, so the level
of client parallelism (FEDSIM_THREADS) never changes the output.
"""

from __future__ import annotations

import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import clients, data, metrics, models
from .aggregators import ServerState, aggregate
from .clients import AttackSpec, ClientReturn, UserTask
from .config import ExperimentConfig
from .core import CLIENT_STREAM, DATA_STREAM, SERVER_STREAM, make_rng
from .errors import ArgumentError, FedsimError
from .metrics import RoundReport
from .qp import uniform_weights

CSV_HEADER = ("round,algorithm,avg_test_acc,std_test_acc,worst5_acc,best5_acc,"
              "avg_train_loss,pct_improved,min_norm_objective,wall_ms")


@dataclass(frozen=True)
class RunResult:
    reports: list[RoundReport]
    final_w: np.ndarray
    config: ExperimentConfig
    csv_path: str


def sample_participants(m: int, p: float, rng: np.random.Generator,
                        attack: AttackSpec) -> list[int]:
    """Uniform sample of ceil(p m) distinct users, sorted.  An attacking
    adversary with always_participates replaces a uniformly chosen member
    whenever the sample missed it."""
    if m < 1 or not 0.0 < p <= 1.0:
        raise ArgumentError("need m >= 1 and p in (0, 1]")
    # ceil(p m), guarding against float noise like 0.1 * 100 = 10.000000000000002
    count = max(1, min(m, int(np.ceil(p * m - 1e-9))))
    if count == m:
        chosen = list(range(m))
    else:
        chosen = sorted(int(u) for u in rng.choice(m, size=count, replace=False))
    if (attack.active and attack.always_participates
            and 0 <= attack.adversary_id < m and attack.adversary_id not in chosen):
        victim = int(rng.integers(len(chosen)))
        chosen[victim] = attack.adversary_id
        chosen.sort()
    return chosen


def _thread_count() -> int:
    raw = os.environ.get("FEDSIM_THREADS", "")
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        return 1


def _build_split(cfg: ExperimentConfig, rng: np.random.Generator) -> data.FederatedSplit:
    dc = cfg.data
    if dc.source == "synthetic":
        pool = data.gen_synthetic(cfg.model, dc.n_total, dc.noise, rng)
    else:
        pool = data.load_csv(dc.csv_path, dc.label_column, dc.csv_header)
    if dc.partition == "shard":
        return data.shard_partition(pool, dc.num_users, dc.shards_per_user, rng)
    return data.iid_partition(pool, dc.num_users, rng)


def build_tasks(cfg: ExperimentConfig) -> dict[int, UserTask]:
    """Materialize every user's task (deterministic data stream), with the
    attack applied to the adversary's copy."""
    split = _build_split(cfg, make_rng(cfg.seed, DATA_STREAM))
    tasks = {}
    for uid in sorted(split):
        part = split[uid]
        task = UserTask(uid, cfg.model, part.train, part.val, part.test,
                        lr=cfg.client.lr, epochs=cfg.client.k,
                        batch_size=cfg.client.b)
        tasks[uid] = clients.apply_attack(task, cfg.attack)
    return tasks


def _evaluate(tasks: dict[int, UserTask], w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """True (uninflated) full-train loss and test accuracy for every user."""
    ids = sorted(tasks)
    losses = np.array([models.loss(tasks[u].spec, w, tasks[u].train) for u in ids])
    accs = np.array([models.accuracy(tasks[u].spec, w, tasks[u].test) for u in ids])
    return losses, accs


def _format_row(rep: RoundReport, algorithm: str) -> str:
    floats = (rep.avg_test_acc, rep.std_test_acc, rep.worst5_acc, rep.best5_acc,
              rep.avg_train_loss, rep.pct_improved, rep.min_norm_objective)
    body = ",".join(f"{x:.9e}" for x in floats)
    return f"{rep.round},{algorithm},{body},{rep.wall_ms}"


def write_report_csv(reports: list[RoundReport], path: str, algorithm: str) -> None:
    """Write the per-round metrics table (LF endings, floats as %.9e)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for rep in reports:
            fh.write(_format_row(rep, algorithm) + "\n")


def _client_pass(tasks: dict[int, UserTask], participants: list[int],
                 w: np.ndarray, seed: int, round_idx: int,
                 prox_mu: float) -> list[ClientReturn]:
    """Run the participating clients, possibly in parallel; results come
    back in participant (canonical) order either way."""
    rngs = {u: make_rng(seed, CLIENT_STREAM, round_idx, u) for u in participants}

    def one(u: int) -> ClientReturn:
        try:
            return clients.client_update(tasks[u], w, rngs[u], prox_mu)
        except FedsimError as exc:
            raise type(exc)(f"round {round_idx}, user {u}: {exc}") from exc

    workers = _thread_count()
    if workers > 1 and len(participants) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, participants))
    return [one(u) for u in participants]


def run(cfg: ExperimentConfig) -> RunResult:
    """Execute one experiment; returns the reports and writes
    ``<out_dir>/<kind>_seed<seed>.csv`` incrementally."""
    tasks = build_tasks(cfg)
    m = cfg.data.num_users
    server_rng = make_rng(cfg.seed, SERVER_STREAM)
    w = models.init_params(cfg.model, server_rng)
    afl_lambda = uniform_weights(m) if cfg.algorithm.kind == "afl" else None
    state = ServerState(w=w, round=0, afl_lambda=afl_lambda)

    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{cfg.algorithm.kind}_seed{cfg.seed}.csv"

    train_losses, _ = _evaluate(tasks, state.w)
    reports: list[RoundReport] = []
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for t in range(cfg.rounds):
            participants = sample_participants(
                m, cfg.participation_fraction, server_rng, cfg.attack)
            returns = _client_pass(tasks, participants, state.w, cfg.seed, t,
                                   cfg.algorithm.prox_mu)
            residual = metrics.stationarity_residual(
                returns, cfg.algorithm.normalizes)
            try:
                state = aggregate(state, returns, cfg.algorithm, participants)
            except FedsimError as exc:
                raise type(exc)(f"round {t}: {exc}") from exc
            new_losses, new_accs = _evaluate(tasks, state.w)
            stats = metrics.user_accuracy_stats(new_accs)
            pct = metrics.pct_improved(
                {u: train_losses[u] for u in participants},
                {u: new_losses[u] for u in participants})
            rep = RoundReport(
                round=t,
                avg_test_acc=stats["avg"], std_test_acc=stats["std"],
                worst5_acc=stats["worst5"], best5_acc=stats["best5"],
                avg_train_loss=float(np.mean(new_losses)),
                pct_improved=pct,
                min_norm_objective=residual,
                participants=tuple(participants),
            )
            reports.append(rep)
            fh.write(_format_row(rep, cfg.algorithm.kind) + "\n")
            fh.flush()
            train_losses = new_losses
            if t % 10 == 0:
                print(f"[fedsim] round {t + 1}/{cfg.rounds} "
                      f"avg_train_loss={rep.avg_train_loss:.6f}", file=sys.stderr)
    return RunResult(reports, state.w, cfg, str(csv_path))
