"""Model zoo: linear regression, multinomial logistic regression, and a
one-hidden-layer tanh MLP, all with analytic gradients.

Parameters live in a single flat vector.  A constant-1 feature is
appended to the inputs, so each linear map of an ``in_dim``-dimensional
input carries ``in_dim + 1`` parameters per output (bias folded in,
stored last).  Layouts:

* linear:   w  has shape (input_dim + 1,)
* logistic: w  reshapes to (num_classes, input_dim + 1)
* mlp:      w  splits into A (hidden_dim, input_dim + 1) then
            B (num_classes, hidden_dim + 1)

The per-example loss is squared error / 2 for linear models and softmax
cross-entropy for classifiers; the objective is the mean over the batch
plus ``l2_reg / 2 * ||w||^2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DimensionError, UnsupportedError

KINDS = ("linear", "logistic", "mlp")


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    input_dim: int
    num_classes: int = 2
    hidden_dim: int = 0
    l2_reg: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ArgumentError(f"unknown model kind {self.kind!r}")
        if self.input_dim < 1:
            raise ArgumentError("input_dim must be >= 1")
        if self.kind in ("logistic", "mlp") and self.num_classes < 2:
            raise ArgumentError("classification needs num_classes >= 2")
        if self.kind == "mlp" and self.hidden_dim < 1:
            raise ArgumentError("mlp needs hidden_dim >= 1")
        if self.l2_reg < 0:
            raise ArgumentError("l2_reg must be >= 0")

    @property
    def is_classifier(self) -> bool:
        return self.kind in ("logistic", "mlp")

    @property
    def param_dim(self) -> int:
        p = self.input_dim + 1
        if self.kind == "linear":
            return p
        if self.kind == "logistic":
            return self.num_classes * p
        return self.hidden_dim * p + self.num_classes * (self.hidden_dim + 1)


@dataclass(frozen=True)
class Batch:
    """Feature matrix (n x input_dim) plus aligned labels/targets."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        feats = np.ascontiguousarray(self.features, dtype=np.float64)
        if feats.ndim != 2:
            raise DimensionError(f"features must be 2-D, got shape {feats.shape}")
        labels = np.asarray(self.labels)
        labels = labels.astype(np.int64) if np.issubdtype(labels.dtype, np.integer) \
            else labels.astype(np.float64)
        if labels.ndim != 1 or labels.shape[0] != feats.shape[0]:
            raise DimensionError(
                f"labels shape {labels.shape} does not align with {feats.shape[0]} rows")
        # empty batches may exist structurally (tiny users get no val/test
        # under the 80/10/10 floor rule) but cannot be evaluated
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)

    @property
    def size(self) -> int:
        return self.features.shape[0]

    def take(self, idx: np.ndarray) -> "Batch":
        return Batch(self.features[idx], self.labels[idx])


def _check_inputs(spec: ModelSpec, w: np.ndarray, batch: Batch) -> None:
    if w.shape != (spec.param_dim,):
        raise DimensionError(
            f"parameter vector has shape {w.shape}, spec expects ({spec.param_dim},)")
    if batch.features.shape[1] != spec.input_dim:
        raise DimensionError(
            f"batch has {batch.features.shape[1]} features, spec expects {spec.input_dim}")
    if batch.size < 1:
        raise ArgumentError("cannot evaluate an empty batch")


def _with_bias(X: np.ndarray) -> np.ndarray:
    return np.hstack([X, np.ones((X.shape[0], 1))])


def _class_ids(spec: ModelSpec, batch: Batch) -> np.ndarray:
    y = batch.labels
    if not np.issubdtype(y.dtype, np.integer):
        raise ArgumentError("classification labels must be integer class ids")
    if y.min() < 0 or y.max() >= spec.num_classes:
        raise ArgumentError(
            f"labels must lie in [0, {spec.num_classes}), got range "
            f"[{y.min()}, {y.max()}]")
    return y


def _softmax_ce(logits: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy and softmax probabilities, numerically stable."""
    zmax = logits.max(axis=1, keepdims=True)
    ez = np.exp(logits - zmax)
    den = ez.sum(axis=1, keepdims=True)
    lse = np.log(den[:, 0]) + zmax[:, 0]
    n = logits.shape[0]
    ce = float(np.mean(lse - logits[np.arange(n), y]))
    return ce, ez / den


def _mlp_unpack(spec: ModelSpec, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p1 = spec.input_dim + 1
    cut = spec.hidden_dim * p1
    A = w[:cut].reshape(spec.hidden_dim, p1)
    B = w[cut:].reshape(spec.num_classes, spec.hidden_dim + 1)
    return A, B


def _logits(spec: ModelSpec, w: np.ndarray, X: np.ndarray) -> np.ndarray:
    Xb = _with_bias(X)
    if spec.kind == "logistic":
        W = w.reshape(spec.num_classes, spec.input_dim + 1)
        return Xb @ W.T
    A, B = _mlp_unpack(spec, w)
    U = np.tanh(Xb @ A.T)
    return _with_bias(U) @ B.T


def loss(spec: ModelSpec, w: np.ndarray, batch: Batch) -> float:
    """Mean per-example loss plus the l2 penalty."""
    _check_inputs(spec, w, batch)
    reg = 0.5 * spec.l2_reg * float(np.dot(w, w))
    if spec.kind == "linear":
        r = _with_bias(batch.features) @ w - batch.labels
        return 0.5 * float(np.mean(r * r)) + reg
    y = _class_ids(spec, batch)
    ce, _ = _softmax_ce(_logits(spec, w, batch.features), y)
    return ce + reg


def grad(spec: ModelSpec, w: np.ndarray, batch: Batch) -> np.ndarray:
    """Gradient of :func:`loss` at ``w``; same shape as ``w``."""
    _check_inputs(spec, w, batch)
    n = batch.size
    Xb = _with_bias(batch.features)
    if spec.kind == "linear":
        r = Xb @ w - batch.labels
        return Xb.T @ r / n + spec.l2_reg * w
    y = _class_ids(spec, batch)
    if spec.kind == "logistic":
        W = w.reshape(spec.num_classes, spec.input_dim + 1)
        _, P = _softmax_ce(Xb @ W.T, y)
        P[np.arange(n), y] -= 1.0
        G = P.T @ Xb / n + spec.l2_reg * W
        return G.ravel()
    A, B = _mlp_unpack(spec, w)
    U = np.tanh(Xb @ A.T)
    Ub = _with_bias(U)
    _, P = _softmax_ce(Ub @ B.T, y)
    P[np.arange(n), y] -= 1.0
    dZ2 = P / n
    gB = dZ2.T @ Ub + spec.l2_reg * B
    dZ1 = (dZ2 @ B[:, : spec.hidden_dim]) * (1.0 - U * U)
    gA = dZ1.T @ Xb + spec.l2_reg * A
    return np.concatenate([gA.ravel(), gB.ravel()])


def accuracy(spec: ModelSpec, w: np.ndarray, batch: Batch) -> float:
    """Fraction of argmax-correct predictions; ties go to the lowest class id."""
    if not spec.is_classifier:
        raise UnsupportedError("accuracy is undefined for regression models")
    _check_inputs(spec, w, batch)
    y = _class_ids(spec, batch)
    pred = np.argmax(_logits(spec, w, batch.features), axis=1)
    return float(np.mean(pred == y))


def init_params(spec: ModelSpec, rng: np.random.Generator) -> np.ndarray:
    """Initial parameter vector: zeros for convex models, uniform(-a, a)
    with a = 1/sqrt(fan_in) per layer for the MLP."""
    if spec.kind != "mlp":
        return np.zeros(spec.param_dim)
    p1 = spec.input_dim + 1
    a_hid = 1.0 / np.sqrt(p1)
    a_out = 1.0 / np.sqrt(spec.hidden_dim + 1)
    A = rng.uniform(-a_hid, a_hid, size=spec.hidden_dim * p1)
    B = rng.uniform(-a_out, a_out, size=spec.num_classes * (spec.hidden_dim + 1))
    return np.concatenate([A, B])
