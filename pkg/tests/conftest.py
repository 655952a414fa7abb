"""Shared test helpers: independent oracles that the implementation is
checked against (finite differences, hand-rolled forward passes, grid
searches).  These intentionally avoid the library's own code paths."""

from __future__ import annotations

import math

import numpy as np
import pytest

from fedsim import models


def central_diff_grad(spec, w, batch, h=1e-5):
    """Central finite differences of the loss, one coordinate at a time."""
    fd = np.zeros_like(w)
    for i in range(w.size):
        e = np.zeros_like(w)
        e[i] = h
        fd[i] = (models.loss(spec, w + e, batch) - models.loss(spec, w - e, batch)) / (2 * h)
    return fd


def rel_grad_error(spec, w, batch, h=1e-5):
    an = models.grad(spec, w, batch)
    fd = central_diff_grad(spec, w, batch, h)
    scale = max(float(np.linalg.norm(an)), 1e-8)
    return float(np.linalg.norm(fd - an)) / scale


def mlp_loss_looped(spec, w, batch):
    """Straightforward per-example forward pass with python loops; written
    independently of the vectorized implementation."""
    p1 = spec.input_dim + 1
    A = w[: spec.hidden_dim * p1].reshape(spec.hidden_dim, p1)
    B = w[spec.hidden_dim * p1:].reshape(spec.num_classes, spec.hidden_dim + 1)
    total = 0.0
    for row, label in zip(batch.features, batch.labels):
        x = list(row) + [1.0]
        hid = [math.tanh(sum(A[j, k] * x[k] for k in range(p1)))
               for j in range(spec.hidden_dim)]
        hid.append(1.0)
        logits = [sum(B[c, j] * hid[j] for j in range(spec.hidden_dim + 1))
                  for c in range(spec.num_classes)]
        zmax = max(logits)
        lse = zmax + math.log(sum(math.exp(z - zmax) for z in logits))
        total += lse - logits[int(label)]
    return total / batch.size + 0.5 * spec.l2_reg * float(np.dot(w, w))


def random_batch(spec, n, rng):
    feats = rng.standard_normal((n, spec.input_dim))
    if spec.is_classifier:
        labels = rng.integers(0, spec.num_classes, size=n)
    else:
        labels = rng.standard_normal(n)
    return models.Batch(feats, labels)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
