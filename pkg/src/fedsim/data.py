"""Dataset generation, CSV ingestion, and federated partitioning.

Two partition schemes are provided: an iid split (global permutation
dealt evenly) and the label-sorted shard scheme that gives each user a
handful of nearly label-pure shards, so no user sees more classes than
it holds shards.  Every user's local data is further split 80/10/10
into train/validation/test (rounded down, remainder to train).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, FormatError
from .models import Batch, ModelSpec


@dataclass(frozen=True)
class Dataset:
    """A global pool of examples; class_count is 0 for regression targets."""

    features: np.ndarray
    labels: np.ndarray
    class_count: int

    def __post_init__(self):
        if self.features.ndim != 2 or self.features.shape[0] < 1:
            raise ArgumentError("dataset needs an (N, input_dim) feature matrix, N >= 1")
        if self.labels.shape != (self.features.shape[0],):
            raise ArgumentError("labels misaligned with feature rows")

    @property
    def size(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class UserSplit:
    """One user's local data plus the source indices behind each piece."""

    train: Batch
    val: Batch
    test: Batch
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray


# map user_id -> UserSplit
FederatedSplit = dict[int, UserSplit]


def gen_synthetic(spec: ModelSpec, n: int, noise: float, rng: np.random.Generator) -> Dataset:
    """Synthetic data matched to a model spec.

    Classification: Gaussian class-conditional features with a distinct
    random mean per class (spread well apart), labels balanced up to
    rounding (class c gets example i whenever i % C == c).  Regression
    (linear spec): standard normal features, targets from a random true
    weight vector plus ``noise``-scaled Gaussian error.  Deterministic
    given (spec, n, noise, rng seed).
    """
    if n < 1:
        raise ArgumentError("n must be >= 1")
    if noise < 0:
        raise ArgumentError("noise must be >= 0")
    p = spec.input_dim
    if spec.is_classifier:
        C = spec.num_classes
        if n < C:
            raise ArgumentError(f"need n >= num_classes ({C}) for balanced labels")
        means = 2.0 * rng.standard_normal((C, p))
        labels = np.arange(n, dtype=np.int64) % C
        feats = means[labels] + noise * rng.standard_normal((n, p))
        return Dataset(feats, labels, C)
    w_true = rng.standard_normal(p + 1)
    feats = rng.standard_normal((n, p))
    targets = feats @ w_true[:p] + w_true[p] + noise * rng.standard_normal(n)
    return Dataset(feats, targets, 0)


def _split_user(data: Dataset, idx: np.ndarray) -> UserSplit:
    """80/10/10 by count, rounded down, remainder to train."""
    n = idx.shape[0]
    n_val = n // 10
    n_test = n // 10
    n_train = n - n_val - n_test
    tr, va, te = idx[:n_train], idx[n_train:n_train + n_val], idx[n_train + n_val:]
    make = lambda ids: Batch(data.features[ids], data.labels[ids])
    return UserSplit(make(tr), make(va), make(te), tr, va, te)


def shard_partition(data: Dataset, num_users: int, shards_per_user: int,
                    rng: np.random.Generator) -> FederatedSplit:
    """Non-iid partition: sort by label, cut into equal contiguous shards,
    shuffle the shards, and deal them round-robin.

    Each user therefore sees at most ``shards_per_user`` distinct labels.
    The total point count must divide exactly into
    ``num_users * shards_per_user`` shards.
    """
    if num_users < 1 or shards_per_user < 1:
        raise ArgumentError("num_users and shards_per_user must be >= 1")
    n_shards = num_users * shards_per_user
    if data.size % n_shards != 0:
        raise ArgumentError(
            f"{data.size} points do not divide into {n_shards} equal shards")
    shard_size = data.size // n_shards
    # stable sort keyed on label, original index breaking ties
    order = np.argsort(data.labels, kind="stable")
    shards = order.reshape(n_shards, shard_size)
    perm = rng.permutation(n_shards)
    split: FederatedSplit = {}
    for u in range(num_users):
        dealt = perm[u::num_users]
        idx = shards[dealt].reshape(-1)
        idx = idx[rng.permutation(idx.shape[0])]
        split[u] = _split_user(data, idx)
    return split


def iid_partition(data: Dataset, num_users: int, rng: np.random.Generator) -> FederatedSplit:
    """Deal a global random permutation evenly; remainder points are dropped."""
    if num_users < 1:
        raise ArgumentError("num_users must be >= 1")
    per_user = data.size // num_users
    if per_user < 1:
        raise ArgumentError(f"{data.size} points cannot cover {num_users} users")
    perm = rng.permutation(data.size)
    return {
        u: _split_user(data, perm[u * per_user:(u + 1) * per_user])
        for u in range(num_users)
    }


def load_csv(path: str, label_column: int, skip_header: bool = False) -> Dataset:
    """Load a rectangular numeric CSV (no header by default; UTF-8).

    The label column is removed from the features.  ``class_count`` is
    the number of distinct label values when all labels are integral,
    else 0 (regression targets).
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    start = 1 if skip_header else 0
    rows: list[list[float]] = []
    width = -1
    for lineno, line in enumerate(lines[start:], start=start + 1):
        if not line.strip():
            continue
        cells = line.split(",")
        if width == -1:
            width = len(cells)
        elif len(cells) != width:
            raise FormatError(
                f"{path}:{lineno}: expected {width} columns, found {len(cells)}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: non-numeric cell ({exc})") from exc
    if not rows:
        raise FormatError(f"{path}: no data rows")
    if width < 2:
        raise FormatError(f"{path}: need at least one feature column plus labels")
    if not -width <= label_column < width:
        raise ArgumentError(f"label_column {label_column} out of range for {width} columns")
    table = np.asarray(rows, dtype=np.float64)
    col = label_column % width
    labels = table[:, col]
    feats = np.delete(table, col, axis=1)
    if np.all(labels == np.floor(labels)):
        labels = labels.astype(np.int64)
        class_count = int(np.unique(labels).shape[0])
    else:
        class_count = 0
    return Dataset(feats, labels, class_count)
