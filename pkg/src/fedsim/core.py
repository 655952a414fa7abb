"""Dense float64 vector arithmetic and deterministic RNG streams.

Model parameters, gradients, and client updates are all flat float64
numpy vectors of a fixed per-experiment dimension.  Everything here is
a pure function over immutable inputs; 64-bit precision throughout.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, NonFiniteError

# Stream tags keep seed-derived generators independent per role.
DATA_STREAM = 1
SERVER_STREAM = 2
CLIENT_STREAM = 3


def as_vector(values) -> np.ndarray:
    """Coerce input to a contiguous 1-D float64 array."""
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionError(f"expected a 1-D vector, got shape {arr.shape}")
    return arr


def ensure_finite(arr: np.ndarray, what: str = "result") -> np.ndarray:
    """Raise if any entry is NaN or Inf; return the array unchanged."""
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{what} contains NaN or Inf")
    return arr


def dot(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise DimensionError(f"dot: length mismatch {a.shape} vs {b.shape}")
    return float(np.dot(a, b))


def axpy(alpha: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Return y + alpha * x."""
    if x.shape != y.shape:
        raise DimensionError(f"axpy: length mismatch {x.shape} vs {y.shape}")
    return y + alpha * x


def l2_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Generator for one (seed, stream ids) tuple.

    Distinct stream ids give statistically independent, platform-stable
    draw sequences, so clients can be processed in any order (or in
    parallel) without perturbing each other's randomness.
    """
    entropy = (int(seed),) + tuple(int(s) for s in stream)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
