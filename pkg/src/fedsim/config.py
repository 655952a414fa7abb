"""Experiment configuration: a flat key = value document with dotted
section keys, plus the grid format used by sweeps.

Example::

    # one experiment
    rounds = 200
    seed = 3
    participation_fraction = 0.5

    algorithm.kind = fedmgda_plus
    algorithm.epsilon = 0.5
    algorithm.global_lr.initial = 1.0
    algorithm.global_lr.decay = 0.1

    model.kind = logistic
    model.input_dim = 8
    model.num_classes = 4

    data.source = synthetic
    data.partition = shard
    data.num_users = 20
    data.shards_per_user = 2
    data.n_total = 2000

    client.k = 1
    client.b = 10
    client.lr = 0.01

Grid files use the same syntax but comma-separated value lists; a sweep
runs the Cartesian product of all listed keys.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np

from .aggregators import KINDS as AGGREGATOR_KINDS
from .aggregators import AggregatorConfig, StepSchedule
from .clients import ATTACK_MODES, AttackSpec
from .errors import ArgumentError, FormatError
from .models import KINDS as MODEL_KINDS
from .models import ModelSpec


@dataclass(frozen=True)
class DataConfig:
    source: str = "synthetic"   # synthetic | csv
    partition: str = "shard"    # shard | iid
    num_users: int = 10
    shards_per_user: int = 5
    n_total: int = 1000
    noise: float = 1.0
    csv_path: str = ""
    label_column: int = -1
    csv_header: bool = False

    def __post_init__(self):
        if self.source not in ("synthetic", "csv"):
            raise ArgumentError(f"unknown data source {self.source!r}")
        if self.partition not in ("shard", "iid"):
            raise ArgumentError(f"unknown partition {self.partition!r}")
        if self.num_users < 1:
            raise ArgumentError("num_users must be >= 1")
        if self.source == "csv" and not self.csv_path:
            raise ArgumentError("csv source needs data.csv_path")


@dataclass(frozen=True)
class ClientConfig:
    k: int = 1       # local epochs
    b: int = 10      # local batch size
    lr: float = 0.01

    def __post_init__(self):
        if self.k < 1 or self.b < 1:
            raise ArgumentError("client.k and client.b must be >= 1")
        if self.lr < 0:
            raise ArgumentError("client.lr must be >= 0")


@dataclass(frozen=True)
class ExperimentConfig:
    algorithm: AggregatorConfig
    model: ModelSpec
    data: DataConfig
    client: ClientConfig = field(default_factory=ClientConfig)
    attack: AttackSpec = field(default_factory=AttackSpec)
    participation_fraction: float = 0.1
    rounds: int = 100
    seed: int = 0
    out_dir: str = "."

    def __post_init__(self):
        if not 0.0 < self.participation_fraction <= 1.0:
            raise ArgumentError("participation_fraction must be in (0, 1]")
        if self.rounds < 1:
            raise ArgumentError("rounds must be >= 1")
        if self.seed < 0:
            raise ArgumentError("seed must be >= 0")


_BOOL_WORDS = {"true": True, "false": False, "yes": True, "no": False}


def _coerce(raw: str):
    word = raw.strip()
    low = word.lower()
    if low in _BOOL_WORDS:
        return _BOOL_WORDS[low]
    try:
        return int(word)
    except ValueError:
        pass
    try:
        return float(word)
    except ValueError:
        pass
    return word


def parse_flat(text: str, list_values: bool = False) -> dict:
    """Parse ``key = value`` lines; '#' starts a comment.  With
    ``list_values`` every value is a comma-separated list (grid files)."""
    out: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise FormatError(f"line {lineno}: expected 'key = value', got {body!r}")
        key, _, raw = body.partition("=")
        key = key.strip()
        if not key:
            raise FormatError(f"line {lineno}: empty key")
        if key in out:
            raise FormatError(f"line {lineno}: duplicate key {key!r}")
        if list_values:
            out[key] = [_coerce(part) for part in raw.split(",") if part.strip()]
        else:
            out[key] = _coerce(raw)
    return out


# every accepted key with its expected python type ('' marks free strings)
_SCHEMA: dict[str, type] = {
    "rounds": int,
    "seed": int,
    "out_dir": str,
    "participation_fraction": float,
    "algorithm.kind": str,
    "algorithm.epsilon": float,
    "algorithm.lambda0": str,
    "algorithm.normalize": bool,
    "algorithm.weighting": str,
    "algorithm.global_lr.initial": float,
    "algorithm.global_lr.decay": float,
    "algorithm.prox_mu": float,
    "algorithm.q": float,
    "algorithm.lipschitz": float,
    "algorithm.afl_lr_lambda": float,
    "algorithm.afl_lr_w": float,
    "model.kind": str,
    "model.input_dim": int,
    "model.num_classes": int,
    "model.hidden_dim": int,
    "model.l2_reg": float,
    "data.source": str,
    "data.partition": str,
    "data.num_users": int,
    "data.shards_per_user": int,
    "data.n_total": int,
    "data.noise": float,
    "data.csv_path": str,
    "data.label_column": int,
    "data.csv_header": bool,
    "client.k": int,
    "client.b": int,
    "client.lr": float,
    "attack.mode": str,
    "attack.magnitude": float,
    "attack.adversary_id": int,
    "attack.always_participates": bool,
}


def _get(table: dict, key: str, default):
    if key not in table:
        return default
    val = table.pop(key)
    want = _SCHEMA[key]
    if want is float and isinstance(val, int) and not isinstance(val, bool):
        return float(val)
    if want is str:
        return str(val)
    if not isinstance(val, want) or (want is int and isinstance(val, bool)):
        raise ArgumentError(f"{key}: expected {want.__name__}, got {val!r}")
    return val


def _parse_lambda0(raw: str, num_users: int) -> np.ndarray | None:
    if raw == "uniform":
        return None
    try:
        vec = np.array([float(p) for p in raw.split(",")], dtype=np.float64)
    except ValueError as exc:
        raise ArgumentError(f"algorithm.lambda0: {exc}") from exc
    if vec.shape[0] != num_users:
        raise ArgumentError(
            f"algorithm.lambda0 has {vec.shape[0]} entries for {num_users} users")
    return vec


def build_config(table: dict) -> ExperimentConfig:
    """Assemble an ExperimentConfig from a parsed key table, applying
    defaults and rejecting unknown keys."""
    table = dict(table)
    for key in table:
        if key not in _SCHEMA:
            raise ArgumentError(f"unknown config key {key!r}")

    rounds = _get(table, "rounds", 100)
    num_users = _get(table, "data.num_users", 10)
    kind = _get(table, "algorithm.kind", "")
    if kind not in AGGREGATOR_KINDS:
        raise ArgumentError(f"algorithm.kind must be one of {AGGREGATOR_KINDS}")
    model_kind = _get(table, "model.kind", "")
    if model_kind not in MODEL_KINDS:
        raise ArgumentError(f"model.kind must be one of {MODEL_KINDS}")
    attack_mode = _get(table, "attack.mode", "none")
    if attack_mode not in ATTACK_MODES:
        raise ArgumentError(f"attack.mode must be one of {ATTACK_MODES}")

    algorithm = AggregatorConfig(
        kind=kind,
        epsilon=_get(table, "algorithm.epsilon", 1.0),
        lambda0=_parse_lambda0(_get(table, "algorithm.lambda0", "uniform"), num_users),
        global_lr=StepSchedule(
            initial=_get(table, "algorithm.global_lr.initial", 1.0),
            decay=_get(table, "algorithm.global_lr.decay", 0.0),
            total_rounds=rounds,
        ),
        prox_mu=_get(table, "algorithm.prox_mu", 0.0),
        q=_get(table, "algorithm.q", 0.0),
        lipschitz=_get(table, "algorithm.lipschitz", 1.0),
        afl_lr_lambda=_get(table, "algorithm.afl_lr_lambda", 0.1),
        afl_lr_w=_get(table, "algorithm.afl_lr_w", 0.01),
        normalize=_get(table, "algorithm.normalize", None),
        weighting=_get(table, "algorithm.weighting", "uniform"),
    )
    model = ModelSpec(
        kind=model_kind,
        input_dim=_get(table, "model.input_dim", 2),
        num_classes=_get(table, "model.num_classes", 2),
        hidden_dim=_get(table, "model.hidden_dim", 0),
        l2_reg=_get(table, "model.l2_reg", 0.0),
    )
    data = DataConfig(
        source=_get(table, "data.source", "synthetic"),
        partition=_get(table, "data.partition", "shard"),
        num_users=num_users,
        shards_per_user=_get(table, "data.shards_per_user", 5),
        n_total=_get(table, "data.n_total", 1000),
        noise=_get(table, "data.noise", 1.0),
        csv_path=_get(table, "data.csv_path", ""),
        label_column=_get(table, "data.label_column", -1),
        csv_header=_get(table, "data.csv_header", False),
    )
    client = ClientConfig(
        k=_get(table, "client.k", 1),
        b=_get(table, "client.b", 10),
        lr=_get(table, "client.lr", 0.01),
    )
    attack = AttackSpec(
        mode=attack_mode,
        magnitude=_get(table, "attack.magnitude", 0.0),
        adversary_id=_get(table, "attack.adversary_id", -1),
        always_participates=_get(table, "attack.always_participates",
                                 attack_mode != "none"),
    )
    return ExperimentConfig(
        algorithm=algorithm,
        model=model,
        data=data,
        client=client,
        attack=attack,
        participation_fraction=_get(table, "participation_fraction", 0.1),
        rounds=rounds,
        seed=_get(table, "seed", 0),
        out_dir=_get(table, "out_dir", "."),
    )


def load_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return build_config(parse_flat(fh.read()))


def load_grid(path: str) -> dict[str, list]:
    with open(path, "r", encoding="utf-8") as fh:
        grid = parse_flat(fh.read(), list_values=True)
    for key in grid:
        if key not in _SCHEMA:
            raise ArgumentError(f"unknown grid key {key!r}")
        if not grid[key]:
            raise ArgumentError(f"grid key {key!r} lists no values")
    return grid


def grid_cells(base: dict, grid: dict[str, list]):
    """Yield (overrides, config) for the Cartesian product of grid values
    applied over the base key table, in deterministic key order."""
    keys = sorted(grid)
    for combo in itertools.product(*(grid[k] for k in keys)):
        overrides = dict(zip(keys, combo))
        merged = dict(base)
        merged.update(overrides)
        yield overrides, build_config(merged)


def with_overrides(cfg: ExperimentConfig, seed: int | None = None,
                   out_dir: str | None = None) -> ExperimentConfig:
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    if out_dir is not None:
        cfg = replace(cfg, out_dir=out_dir)
    return cfg
