"""Brute-force reference for the min-norm weighting problem.

Used by the test suite and by ``fedsim qp-check`` to validate the
projected-gradient solver against an independent method.  For up to
three participants the feasible set is enumerated exhaustively on a
box-filtered lattice anchored at the exact bound values (optima sit on
box faces, so the anchors matter).  Beyond that a full 1e-3 grid would
need ~1e8+ points, so a coarse lattice is polished by pairwise
mass-exchange descent with closed-form line searches, which lands on
active bounds exactly.  A greedy linear-program certificate provides an
optimality-gap bound as a further grid-free cross-check.
"""

from __future__ import annotations

import numpy as np

from .errors import ArgumentError
from .qp import QpProblem, box_bounds, solve_min_norm

_COARSE_STEP = 0.125  # full-lattice resolution used to seed the m >= 4 polish


def objective_at(gradients: np.ndarray, lam: np.ndarray) -> float:
    d = lam @ gradients
    return float(np.dot(d, d))


def _best(gradients: np.ndarray, candidates: np.ndarray) -> float:
    vals = np.einsum("ij,ij->i", candidates @ gradients, candidates @ gradients)
    return float(vals.min())


def _grid_1d(lo: float, hi: float, step: float) -> np.ndarray:
    pts = np.arange(lo, hi, step)
    return np.unique(np.concatenate([pts, [lo, hi]]))


def grid_min_objective(problem: QpProblem, step: float = 1e-3) -> float:
    """Minimum objective over feasible candidate weightings at the given
    resolution (box-filtered), bound-anchored so active-box optima are
    represented exactly."""
    g, lam0, eps = problem.gradients, problem.lambda0, problem.epsilon
    m = problem.m
    if eps == 0.0 or m == 1:
        return objective_at(g, lam0)
    lo, hi = box_bounds(lam0, eps)
    if m == 2:
        a = _grid_1d(max(lo[0], 1.0 - hi[1]), min(hi[0], 1.0 - lo[1]), step)
        cand = np.stack([a, 1.0 - a], axis=1)
        return _best(g, cand)
    if m == 3:
        # enumerate every choice of eliminated coordinate: optima pinned to
        # two box faces then appear as exact (endpoint, endpoint) pairs
        best = np.inf
        for drop in range(3):
            i, j = [k for k in range(3) if k != drop]
            a = _grid_1d(lo[i], hi[i], step)
            b = _grid_1d(lo[j], hi[j], step)
            A, B = np.meshgrid(a, b, indexing="ij")
            C = 1.0 - A - B
            mask = (C >= lo[drop] - 1e-12) & (C <= hi[drop] + 1e-12)
            if not mask.any():
                continue
            cand = np.empty((int(mask.sum()), 3))
            cand[:, i], cand[:, j], cand[:, drop] = A[mask], B[mask], C[mask]
            best = min(best, _best(g, cand))
        return best if np.isfinite(best) else objective_at(g, lam0)
    return _polished_min(g, lam0, lo, hi)


def _pair_exchange_descent(g: np.ndarray, lam: np.ndarray, lo: np.ndarray,
                           hi: np.ndarray, sweeps: int = 500) -> float:
    """Cyclic pairwise mass exchange with exact line searches.

    Feasible directions on the box-simplex are spanned by e_i - e_j
    moves; along each the objective is a 1-D quadratic minimized in
    closed form and clipped to the move's feasible interval, so active
    bounds are reached exactly.  Convexity makes the sweep limit the
    global minimum.
    """
    G = g @ g.T
    lam = lam.copy()
    for _ in range(sweeps):
        moved = 0.0
        for i in range(lam.shape[0]):
            for j in range(i + 1, lam.shape[0]):
                grad_pair = 2.0 * (G[i] @ lam - G[j] @ lam)
                curve = G[i, i] - 2.0 * G[i, j] + G[j, j]
                t_lo = max(lo[i] - lam[i], lam[j] - hi[j])
                t_hi = min(hi[i] - lam[i], lam[j] - lo[j])
                if curve > 0.0:
                    t = np.clip(-grad_pair / (2.0 * curve), t_lo, t_hi)
                elif grad_pair > 0.0:
                    t = t_lo
                elif grad_pair < 0.0:
                    t = t_hi
                else:
                    t = 0.0
                if t != 0.0:
                    lam[i] += t
                    lam[j] -= t
                    moved = max(moved, abs(t))
        if moved < 1e-15:
            break
    return objective_at(g, lam)


def _polished_min(g: np.ndarray, lam0: np.ndarray, lo: np.ndarray,
                  hi: np.ndarray) -> float:
    """m >= 4: a full grid at 1e-3 is intractable, so seed with the best
    point of a coarse feasible lattice and polish by exact pairwise
    descent (no lattice resolution limit)."""
    m = lam0.shape[0]
    k = round(1.0 / _COARSE_STEP)
    coarse = np.asarray(list(_compositions(k, m)), dtype=np.float64) * _COARSE_STEP
    mask = np.all((coarse >= lo - 1e-12) & (coarse <= hi + 1e-12), axis=1)
    cand = np.vstack([coarse[mask], lam0[None, :]])
    vals = np.einsum("ij,ij->i", cand @ g, cand @ g)
    seed = cand[int(np.argmin(vals))]
    return min(_pair_exchange_descent(g, seed, lo, hi),
               _pair_exchange_descent(g, lam0, lo, hi))


def _compositions(total: int, parts: int):
    """Integer vectors of the given length summing to total (simplex lattice)."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def linear_min_over_box_simplex(c: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> float:
    """Exact minimum of <c, lam> over {lo <= lam <= hi, sum lam = 1}:
    start everything at its lower bound and pour the remaining mass into
    coordinates in increasing cost order."""
    remaining = 1.0 - float(lo.sum())
    if remaining < -1e-9:
        raise ArgumentError("box does not intersect the simplex")
    lam = lo.copy()
    for i in np.argsort(c, kind="stable"):
        room = hi[i] - lo[i]
        add = min(room, remaining)
        lam[i] += add
        remaining -= add
        if remaining <= 0:
            break
    return float(np.dot(c, lam))


def certificate_gap(problem: QpProblem, lam: np.ndarray) -> float:
    """Upper bound on f(lam) - f* from first-order optimality.

    By convexity f(mu) >= f(lam) + <grad f(lam), mu - lam>, so
    f* >= f(lam) - gap with gap = <grad, lam> - min_mu <grad, mu> over
    the feasible set (an exact greedy linear program).
    """
    g = problem.gradients
    lo, hi = box_bounds(problem.lambda0, problem.epsilon)
    grad_f = 2.0 * (g @ (lam @ g))
    return float(np.dot(grad_f, lam)) - linear_min_over_box_simplex(grad_f, lo, hi)


def random_instance(rng: np.random.Generator, m_max: int = 5, d_max: int = 4,
                    eps_choices=(0.0, 0.25, 0.5, 1.0)) -> QpProblem:
    """Random unit-normalized gradient rows (occasionally a zero row, as a
    floored update would contribute), Dirichlet lambda0, epsilon cycled
    uniformly."""
    m = int(rng.integers(1, m_max + 1))
    d = int(rng.integers(1, d_max + 1))
    g = rng.standard_normal((m, d))
    for i in range(m):
        if m > 1 and rng.random() < 0.1:
            g[i] = 0.0
        else:
            g[i] /= np.linalg.norm(g[i])
    lam0 = rng.dirichlet(np.ones(m))
    eps = float(eps_choices[int(rng.integers(len(eps_choices)))])
    return QpProblem(g, lam0, eps)


def check_instances(count: int, seed: int, tol: float = 1e-5,
                    step: float = 1e-3) -> dict:
    """Run ``count`` random instances; compare solver vs grid objectives.

    Returns a summary dict with the worst absolute objective deviation,
    the worst certificate gap, and the number of failures at ``tol``.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    worst_gap = 0.0
    failures = 0
    for _ in range(count):
        prob = random_instance(rng)
        sol = solve_min_norm(prob)
        ref = grid_min_objective(prob, step=step)
        err = abs(sol.objective - ref)
        gap = certificate_gap(prob, sol.lam)
        worst = max(worst, err)
        worst_gap = max(worst_gap, gap)
        if err > tol:
            failures += 1
    return {"instances": count, "max_abs_err": worst,
            "max_certificate_gap": worst_gap, "failures": failures, "tol": tol}
