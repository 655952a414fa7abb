"""Simulated client-side computation: local minibatch SGD (optionally
with a proximal pull toward the incoming model), update normalization,
and adversarial loss-inflation wrappers.

A client receives the current global model w0, runs k epochs of SGD
over ceil(n/b) batches, and reports the pseudo-gradient g = w0 - w
together with its full-train-set losses at w0 and at the final w.
Loss-inflation attacks live on the task itself: a bias attack shifts
the reported losses only (gradients untouched), a scaling attack scales
the loss and hence every local gradient step.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import models
from .core import ensure_finite, l2_norm
from .errors import ArgumentError
from .models import Batch, ModelSpec

ATTACK_MODES = ("none", "bias", "scaling")

# updates shorter than this normalize to the zero vector, which then
# contributes a zero column to the server QP
GRAD_FLOOR = 1e-12


@dataclass(frozen=True)
class AttackSpec:
    mode: str = "none"
    magnitude: float = 0.0
    adversary_id: int = -1
    always_participates: bool = False

    def __post_init__(self):
        if self.mode not in ATTACK_MODES:
            raise ArgumentError(f"unknown attack mode {self.mode!r}")
        if self.mode == "bias" and self.magnitude < 0:
            raise ArgumentError("bias magnitude must be >= 0")
        if self.mode == "scaling" and self.magnitude <= 0:
            raise ArgumentError("scaling magnitude must be > 0")

    @property
    def active(self) -> bool:
        return self.mode != "none"


@dataclass(frozen=True)
class UserTask:
    """One user's local data and SGD hyperparameters.

    loss_scale / loss_bias implement the adversarial inflation of this
    user's loss function; they default to the honest identity.
    """

    user_id: int
    spec: ModelSpec
    train: Batch
    val: Batch
    test: Batch
    lr: float
    epochs: int = 1
    batch_size: int = 10
    loss_scale: float = 1.0
    loss_bias: float = 0.0

    def __post_init__(self):
        if self.epochs < 1:
            raise ArgumentError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ArgumentError("batch_size must be >= 1")
        if self.lr < 0:
            raise ArgumentError("lr must be >= 0")

    def reported_loss(self, w: np.ndarray) -> float:
        """Full-train-set loss as this user reports it to the server
        (including any inflation)."""
        return self.loss_scale * models.loss(self.spec, w, self.train) + self.loss_bias


@dataclass(frozen=True)
class ClientReturn:
    update: np.ndarray  # g = w0 - w, model dimension
    train_loss_before: float
    train_loss_after: float
    sample_count: int


def client_update(task: UserTask, w0: np.ndarray, rng: np.random.Generator,
                  prox_mu: float = 0.0) -> ClientReturn:
    """Run the local update and return the pseudo-gradient.

    Each epoch shuffles the train set and splits it into r = ceil(n/b)
    batches (the last may be short; every example appears exactly once
    per epoch).  Each batch takes the step
    w <- w - lr * (grad_local(w; batch) + prox_mu * (w - w0)).
    """
    if prox_mu < 0:
        raise ArgumentError("prox_mu must be >= 0")
    n = task.train.size
    if n < 1:
        raise ArgumentError("client has an empty train set")
    b = task.batch_size
    r = -(-n // b)  # ceil
    w = w0.copy()
    for _ in range(task.epochs):
        # a single full batch needs no shuffle; gradient is order-exact
        order = rng.permutation(n) if r > 1 else np.arange(n)
        for j in range(r):
            batch = task.train.take(order[j * b:(j + 1) * b])
            step = task.loss_scale * models.grad(task.spec, w, batch)
            if prox_mu:
                step = step + prox_mu * (w - w0)
            w = w - task.lr * step
    g = ensure_finite(w0 - w, f"user {task.user_id} update")
    return ClientReturn(g, task.reported_loss(w0), task.reported_loss(w), n)


def normalize_update(g: np.ndarray, floor: float = GRAD_FLOOR) -> np.ndarray:
    """g / ||g||, or the zero vector when ||g|| < floor."""
    if floor <= 0:
        raise ArgumentError("floor must be > 0")
    nrm = l2_norm(g)
    if nrm < floor:
        return np.zeros_like(g)
    return g / nrm


def apply_attack(task: UserTask, attack: AttackSpec) -> UserTask:
    """Return the task as the adversary would run it; identity for honest
    users or inactive attacks."""
    if not attack.active or attack.adversary_id != task.user_id:
        return task
    if attack.mode == "bias":
        return replace(task, loss_bias=task.loss_bias + attack.magnitude)
    return replace(task, loss_scale=task.loss_scale * attack.magnitude)
