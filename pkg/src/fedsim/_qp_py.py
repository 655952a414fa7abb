"""Pure-numpy kernels for the box-constrained simplex projection and the
projected-gradient min-norm solve.

These mirror the compiled versions in ``_qp_cy`` operation for
operation; ``fedsim.qp`` picks whichever backend is available at import
time.  Keep the two files in sync.
"""

from __future__ import annotations

import numpy as np

MAX_BISECT = 128
SUM_TOL = 1e-12


def project_kernel(v: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {lo <= x <= hi, sum(x) = 1}.

    Bisection on the hyperplane shift theta: x(theta) = clip(v - theta,
    lo, hi) has a continuous non-increasing sum, so a sign-preserving
    bracket always exists for feasible bounds.  Terminates once
    |sum(x) - 1| <= 1e-12 (or at the iteration cap, by which point the
    bracket is at float resolution).
    """
    t_lo = float(np.min(v - hi))
    t_hi = float(np.max(v - lo))
    out = np.clip(v, lo, hi)
    for _ in range(MAX_BISECT):
        mid = 0.5 * (t_lo + t_hi)
        out = np.clip(v - mid, lo, hi)
        s = float(np.sum(out))
        if abs(s - 1.0) <= SUM_TOL:
            break
        if s > 1.0:
            t_lo = mid
        else:
            t_hi = mid
    return out


def min_norm_kernel(G: np.ndarray, lam0: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                    tol: float, max_iters: int,
                    objective_trace: list | None = None):
    """Projected gradient on f(lam) = lam' G lam over the box-simplex.

    Fixed step 1/(2 trace(G) + 1e-12) <= 1/(2 lambda_max) guarantees
    monotone descent.  Starts at lam0; stops when the iterate moves by
    at most ``tol`` in sup-norm.  Returns (best lambda by objective,
    iterations, converged).
    """
    step = 1.0 / (2.0 * float(np.trace(G)) + 1e-12)
    lam = lam0.copy()
    best = lam.copy()
    best_obj = float(lam @ G @ lam)
    if objective_trace is not None:
        objective_trace.append(best_obj)
    iters = 0
    converged = False
    while iters < max_iters:
        iters += 1
        v = lam - step * 2.0 * (G @ lam)
        new = project_kernel(v, lo, hi)
        delta = float(np.max(np.abs(new - lam)))
        lam = new
        obj = float(lam @ G @ lam)
        if objective_trace is not None:
            objective_trace.append(obj)
        if obj < best_obj:
            best_obj = obj
            best = lam.copy()
        if delta <= tol:
            converged = True
            break
    return best, iters, converged
