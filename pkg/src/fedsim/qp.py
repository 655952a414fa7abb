"""Server-side quadratic program: the minimum-norm convex combination of
client update vectors, with the weighting confined to an l-infinity box
around a reference weighting intersected with the simplex.

Solving

    minimize   || sum_i lambda_i g_i ||^2
    subject to lambda in simplex,  |lambda_i - lambda0_i| <= epsilon

yields the common update direction: epsilon = 0 pins the weights at
lambda0 (plain weighted averaging), epsilon = 1 frees them over the
whole simplex (the direction becomes the minimum-norm element of the
convex hull of the g_i, which is zero exactly at Pareto-stationary
points).

The solver is projected gradient descent on the m x m Gram matrix with
an exact bisection projection; the hot loops live in a compiled
extension (``_qp_cy``) when available and in numpy (``_qp_py``)
otherwise.  Set FEDSIM_PURE_PYTHON=1 to force the fallback.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _qp_py
from .errors import ArgumentError, DimensionError, InfeasibleError

try:
    from . import _qp_cy
except ImportError:
    _qp_cy = None

_kernels = _qp_py if (
    _qp_cy is None or os.environ.get("FEDSIM_PURE_PYTHON", "") not in ("", "0")
) else _qp_cy

# feasibility slack when checking box sums and the simplex invariant
_SIMPLEX_TOL = 1e-9


def backend() -> str:
    """Name of the kernel backend selected at import: 'compiled' or 'python'."""
    return "compiled" if _kernels is _qp_cy and _qp_cy is not None else "python"


def uniform_weights(m: int) -> np.ndarray:
    if m < 1:
        raise ArgumentError("need at least one participant")
    return np.full(m, 1.0 / m)


def check_simplex(weights: np.ndarray, tol: float = _SIMPLEX_TOL) -> np.ndarray:
    """Validate a weighting: nonnegative entries summing to 1 within tol."""
    w = np.ascontiguousarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.shape[0] < 1:
        raise ArgumentError("weights must be a nonempty 1-D vector")
    if w.min() < -tol:
        raise ArgumentError(f"weights must be nonnegative, min is {w.min()}")
    s = float(w.sum())
    if abs(s - 1.0) > tol:
        raise ArgumentError(f"weights must sum to 1, got {s}")
    return w


def box_bounds(lambda0: np.ndarray, epsilon: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-coordinate bounds max(0, lambda0-eps) .. min(1, lambda0+eps),
    checked for a nonempty intersection with the simplex."""
    if epsilon < 0:
        raise ArgumentError("epsilon must be >= 0")
    lo = np.maximum(0.0, lambda0 - epsilon)
    hi = np.minimum(1.0, lambda0 + epsilon)
    if float(lo.sum()) > 1.0 + _SIMPLEX_TOL or float(hi.sum()) < 1.0 - _SIMPLEX_TOL:
        raise InfeasibleError(
            f"box around lambda0 with epsilon={epsilon} misses the simplex")
    return lo, hi


def project_box_simplex(v, lambda0, epsilon: float) -> np.ndarray:
    """Euclidean projection of ``v`` onto the box-constrained simplex."""
    v = np.ascontiguousarray(v, dtype=np.float64)
    lam0 = check_simplex(lambda0)
    if v.shape != lam0.shape:
        raise DimensionError(f"point shape {v.shape} vs lambda0 {lam0.shape}")
    lo, hi = box_bounds(lam0, epsilon)
    return _kernels.project_kernel(v, lo, hi)


@dataclass(frozen=True)
class QpProblem:
    """Stacked client update vectors (rows), the reference weighting, and
    the box half-width."""

    gradients: np.ndarray  # (m, d)
    lambda0: np.ndarray    # (m,)
    epsilon: float

    def __post_init__(self):
        g = np.ascontiguousarray(self.gradients, dtype=np.float64)
        if g.ndim == 1:
            g = g.reshape(1, -1)
        if g.ndim != 2 or g.shape[0] < 1:
            raise ArgumentError("need at least one gradient row")
        lam0 = check_simplex(self.lambda0)
        if lam0.shape[0] != g.shape[0]:
            raise DimensionError(
                f"lambda0 has {lam0.shape[0]} entries for {g.shape[0]} gradients")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ArgumentError("epsilon must lie in [0, 1]")
        object.__setattr__(self, "gradients", g)
        object.__setattr__(self, "lambda0", lam0)

    @property
    def m(self) -> int:
        return self.gradients.shape[0]


@dataclass(frozen=True)
class QpSolution:
    lam: np.ndarray        # minimizing weights
    direction: np.ndarray  # sum_i lam_i g_i
    objective: float       # ||direction||^2
    iterations: int
    converged: bool


_KKT_TOL = 1e-9


def _active_sets(x: np.ndarray, lo: np.ndarray, hi: np.ndarray):
    at_lo = x <= lo + 1e-9
    at_hi = x >= hi - 1e-9
    return at_lo, at_hi, ~(at_lo | at_hi)


def _kkt_verified(G: np.ndarray, x: np.ndarray, lo: np.ndarray,
                  hi: np.ndarray) -> bool:
    """First-order optimality of a feasible point, to absolute ~1e-9:
    free coordinates share one multiplier, bound multipliers have the
    right signs."""
    if not (np.all(x >= lo - 1e-10) and np.all(x <= hi + 1e-10)
            and abs(float(x.sum()) - 1.0) <= 1e-9):
        return False
    at_lo, at_hi, free = _active_sets(x, lo, hi)
    grad = 2.0 * (G @ x)
    if free.any():
        nu = float(grad[free].mean())
        if float(np.abs(grad[free] - nu).max()) > _KKT_TOL:
            return False
    else:
        # pick any multiplier between the two bound groups
        lo_only = at_lo & ~at_hi
        hi_only = at_hi & ~at_lo
        upper = grad[lo_only].min() if lo_only.any() else np.inf
        lower = grad[hi_only].max() if hi_only.any() else -np.inf
        if lower > upper + _KKT_TOL:
            return False
        nu = float(min(upper, max(lower, 0.0)))
    mult_lo = grad[at_lo & ~at_hi] - nu
    mult_hi = nu - grad[at_hi & ~at_lo]
    return ((mult_lo.size == 0 or mult_lo.min() >= -_KKT_TOL)
            and (mult_hi.size == 0 or mult_hi.min() >= -_KKT_TOL))


def _face_minimizer(G: np.ndarray, free: np.ndarray, fixed: np.ndarray):
    """Exact minimizer of x' G x over {x_free free, x_fixed pinned,
    sum x = 1}; returns (point, multiplier) or (None, None) if the
    linear solve degenerates."""
    x = fixed.copy()
    if not free.any():
        return x, None
    nF = int(free.sum())
    kkt = np.zeros((nF + 1, nF + 1))
    kkt[:nF, :nF] = 2.0 * G[np.ix_(free, free)]
    kkt[:nF, nF] = -1.0
    kkt[nF, :nF] = 1.0
    rhs = np.concatenate([
        -2.0 * (G[np.ix_(free, ~free)] @ fixed[~free]),
        [1.0 - float(fixed[~free].sum())],
    ])
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
    if not np.all(np.isfinite(sol)):
        return None, None
    x[free] = sol[:nF]
    return x, float(sol[nF])


def _kkt_polish(G: np.ndarray, lam: np.ndarray, lo: np.ndarray,
                hi: np.ndarray) -> tuple[np.ndarray, bool]:
    """Primal active-set finish for the projected-gradient iterate.

    Fixed-step projected gradient identifies the optimal face quickly
    but approaches it only asymptotically on ill-conditioned Gram
    matrices, which leaves the stated objective and descent-certificate
    tolerances out of reach.  Starting from the iterate's own active
    set, each pass moves toward the current face's exact minimizer,
    stopping at the first blocking bound (the objective never
    increases), and releases the worst dual violator once a face
    minimizer is reached.  Finite for a convex quadratic; the safety
    cap only guards floating-point cycling."""
    m = lam.shape[0]
    x = lam.copy()
    at_lo, at_hi, _ = _active_sets(x, lo, hi)
    work_lo = at_lo.copy()
    work_hi = at_hi & ~at_lo
    for _ in range(5 * m + 20):
        free = ~(work_lo | work_hi)
        fixed = np.where(work_lo, lo, hi)
        target, nu = _face_minimizer(G, free, fixed)
        if target is None:
            return x, _kkt_verified(G, x, lo, hi)
        step = target - x
        if float(np.max(np.abs(step))) <= 1e-13:
            # at the face minimizer: check multipliers, release the worst
            grad = 2.0 * (G @ x)
            if nu is None:
                lo_only = work_lo & ~work_hi
                hi_only = work_hi & ~work_lo
                upper = grad[lo_only].min() if lo_only.any() else np.inf
                lower = grad[hi_only].max() if hi_only.any() else -np.inf
                if lower <= upper + _KKT_TOL:
                    return x, True
                nu = 0.5 * (lower + upper)
            mult = np.zeros(m)
            mult[work_lo] = grad[work_lo] - nu
            mult[work_hi] = nu - grad[work_hi]
            bound = work_lo | work_hi
            if not bound.any() or mult[bound].min() >= -_KKT_TOL:
                return x, True
            worst = int(np.flatnonzero(bound)[np.argmin(mult[bound])])
            work_lo[worst] = False
            work_hi[worst] = False
            continue
        # longest feasible move toward the face minimizer
        alpha = 1.0
        blocker = -1
        block_at_lo = False
        for i in np.flatnonzero(free):
            if step[i] < 0 and target[i] < lo[i]:
                a = (lo[i] - x[i]) / step[i]
                if a < alpha:
                    alpha, blocker, block_at_lo = a, i, True
            elif step[i] > 0 and target[i] > hi[i]:
                a = (hi[i] - x[i]) / step[i]
                if a < alpha:
                    alpha, blocker, block_at_lo = a, i, False
        x = x + max(alpha, 0.0) * step
        if blocker >= 0:
            x[blocker] = lo[blocker] if block_at_lo else hi[blocker]
            work_lo[blocker] = block_at_lo
            work_hi[blocker] = not block_at_lo
        if alpha >= 1.0 and blocker < 0:
            x = target
    return x, _kkt_verified(G, x, lo, hi)


def solve_min_norm(problem: QpProblem, tol: float = 1e-10,
                   max_iters: int | None = None) -> QpSolution:
    """Solve the box-constrained min-norm weighting problem.

    Projected-gradient iteration lam <- project(lam - s * 2 G lam) on
    the Gram matrix G (fixed step s = 1/(2 trace G + 1e-12)), started
    at lambda0, stopped when the sup-norm move is <= tol or at
    max_iters (default 10 m^2 + 1000).  The best iterate by objective
    is returned; with degenerate Gram matrices only the objective is
    unique, not the weights.
    """
    if tol <= 0:
        raise ArgumentError("tol must be > 0")
    g = problem.gradients
    m = problem.m
    if max_iters is None:
        max_iters = 10 * m * m + 1000
    lo, hi = box_bounds(problem.lambda0, problem.epsilon)
    if m == 1:
        # the simplex is the single point 1.0
        lam, iters, converged = np.ones(1), 0, True
    else:
        G = np.ascontiguousarray(g @ g.T)
        lam, iters, converged = _kernels.min_norm_kernel(
            G, problem.lambda0, lo, hi, float(tol), int(max_iters))
        lam, verified = _kkt_polish(G, lam, lo, hi)
        converged = converged or verified
    direction = lam @ g
    objective = float(np.dot(direction, direction))
    return QpSolution(lam, direction, objective, iters, converged)


def is_pareto_stationary(gradients, tol: float) -> bool:
    """True iff some convex combination of the gradients is (near) zero:
    the unconstrained min-norm objective is <= tol^2."""
    g = np.ascontiguousarray(gradients, dtype=np.float64)
    if g.ndim == 1:
        g = g.reshape(1, -1)
    if g.shape[0] < 1:
        raise ArgumentError("need at least one gradient")
    sol = solve_min_norm(QpProblem(g, uniform_weights(g.shape[0]), 1.0))
    return sol.objective <= tol * tol
