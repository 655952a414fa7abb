import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fedsim import _qp_py, qp, qp_reference
from fedsim.errors import ArgumentError, DimensionError, InfeasibleError
from fedsim.qp import QpProblem, project_box_simplex, solve_min_norm, uniform_weights

vec = lambda *xs: np.array(xs, dtype=np.float64)


# ---------------------------------------------------------------- projection

def test_projection_clips_to_the_box():
    # 1-D feasible segment: grid search confirms (0.7, 0.3)
    got = project_box_simplex(vec(0.9, 0.1), vec(0.5, 0.5), 0.2)
    np.testing.assert_allclose(got, vec(0.7, 0.3), atol=1e-12)
    lam1 = np.linspace(0.3, 0.7, 4001)
    cand = np.stack([lam1, 1 - lam1], axis=1)
    best = cand[np.argmin(((cand - vec(0.9, 0.1)) ** 2).sum(axis=1))]
    np.testing.assert_allclose(got, best, atol=1e-3)


def test_projection_epsilon_zero_returns_lambda0():
    lam0 = vec(0.25, 0.75)
    for v in (vec(9.0, -3.0), vec(0.0, 0.0), vec(0.25, 0.75)):
        np.testing.assert_array_equal(project_box_simplex(v, lam0, 0.0), lam0)


def test_projection_of_feasible_point_is_identity():
    v = vec(0.2, 0.3, 0.5)
    got = project_box_simplex(v, uniform_weights(3), 1.0)
    np.testing.assert_allclose(got, v, atol=1e-9)


def test_projection_infeasible_box():
    with pytest.raises(InfeasibleError):
        qp.box_bounds(vec(0.0, 0.0), 0.0)  # sums below 1 for any theta


def test_projection_matches_dense_grid_m2(rng):
    for _ in range(30):
        lam0 = rng.dirichlet(np.ones(2))
        eps = float(rng.uniform(0.05, 1.0))
        v = rng.standard_normal(2)
        got = project_box_simplex(v, lam0, eps)
        lo, hi = qp.box_bounds(lam0, eps)
        lam1 = np.linspace(max(lo[0], 1 - hi[1]), min(hi[0], 1 - lo[1]), 20001)
        cand = np.stack([lam1, 1 - lam1], axis=1)
        best = cand[np.argmin(((cand - v) ** 2).sum(axis=1))]
        np.testing.assert_allclose(got, best, atol=1e-3)


@settings(deadline=None, max_examples=80)
@given(st.integers(2, 6), st.data())
def test_projection_output_is_feasible(m, data):
    floats = st.floats(-5, 5)
    v = np.array(data.draw(st.lists(floats, min_size=m, max_size=m)))
    raw = np.array(data.draw(st.lists(st.floats(0.01, 1.0), min_size=m, max_size=m)))
    lam0 = raw / raw.sum()
    eps = data.draw(st.floats(0.0, 1.0))
    out = project_box_simplex(v, lam0, eps)
    lo, hi = qp.box_bounds(lam0, eps)
    assert np.all(out >= lo - 1e-12) and np.all(out <= hi + 1e-12)
    assert abs(out.sum() - 1.0) <= 1e-9


# ------------------------------------------------------------------- solving

def test_single_gradient_weight_is_one():
    sol = solve_min_norm(QpProblem(np.array([[2.5, -1.0]]), vec(1.0), 1.0))
    np.testing.assert_array_equal(sol.lam, vec(1.0))
    np.testing.assert_array_equal(sol.direction, vec(2.5, -1.0))


def test_opposing_gradients_cancel():
    g = np.array([[1.0, 0.0], [-1.0, 0.0]])
    sol = solve_min_norm(QpProblem(g, uniform_weights(2), 1.0))
    np.testing.assert_allclose(sol.lam, vec(0.5, 0.5), atol=1e-8)
    assert sol.objective <= 1e-16


def test_two_vector_closed_form():
    g1, g2 = vec(2.0, 0.0), vec(0.0, 1.0)
    sol = solve_min_norm(QpProblem(np.stack([g1, g2]), uniform_weights(2), 1.0))
    lam_star = np.clip(np.dot(g2 - g1, g2) / np.dot(g1 - g2, g1 - g2), 0, 1)
    np.testing.assert_allclose(sol.lam, vec(lam_star, 1 - lam_star), atol=1e-7)
    np.testing.assert_allclose(sol.direction, vec(0.4, 0.8), atol=1e-7)
    assert sol.objective == pytest.approx(0.8, abs=1e-8)


def test_objective_matches_grid_oracle(rng):
    for _ in range(40):
        prob = qp_reference.random_instance(rng, m_max=3)
        sol = solve_min_norm(prob)
        ref = qp_reference.grid_min_objective(prob, step=1e-3)
        assert abs(sol.objective - ref) <= 1e-5
        assert qp_reference.certificate_gap(prob, sol.lam) <= 1e-6


def test_objective_equals_direction_norm(rng):
    for _ in range(20):
        prob = qp_reference.random_instance(rng)
        sol = solve_min_norm(prob)
        assert sol.objective == pytest.approx(
            float(np.dot(sol.direction, sol.direction)), rel=1e-12, abs=1e-300)


def test_descent_certificate_at_epsilon_one(rng):
    # at the min-norm point every gradient satisfies <g_i, d> >= ||d||^2
    for _ in range(40):
        m = int(rng.integers(2, 6))
        g = rng.standard_normal((m, 4))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        sol = solve_min_norm(QpProblem(g, uniform_weights(m), 1.0))
        if sol.objective <= 1e-12:
            continue
        inner = g @ sol.direction
        assert np.all(inner >= sol.objective - 1e-8)


def test_interior_coordinates_share_inner_product(rng):
    # box-constrained optimality: coordinates strictly inside the box see
    # a common value of <g_i, d>
    hits = 0
    for _ in range(60):
        m = int(rng.integers(3, 6))
        g = rng.standard_normal((m, 4))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        lam0 = rng.dirichlet(np.ones(m))
        eps = float(rng.uniform(0.05, 0.6))
        sol = solve_min_norm(QpProblem(g, lam0, eps))
        lo, hi = qp.box_bounds(lam0, eps)
        interior = (sol.lam > lo + 1e-7) & (sol.lam < hi - 1e-7)
        if interior.sum() >= 2:
            hits += 1
            inner = g @ sol.direction
            spread = inner[interior].max() - inner[interior].min()
            assert spread <= 1e-6
    assert hits > 5  # the regime actually occurred


def test_monotone_objective_along_iterates(rng):
    for _ in range(20):
        prob = qp_reference.random_instance(rng)
        lo, hi = qp.box_bounds(prob.lambda0, prob.epsilon)
        G = np.ascontiguousarray(prob.gradients @ prob.gradients.T)
        trace: list = []
        _qp_py.min_norm_kernel(G, prob.lambda0, lo, hi, 1e-10, 2000,
                               objective_trace=trace)
        diffs = np.diff(np.array(trace))
        assert np.all(diffs <= 1e-12)


def test_epsilon_nesting(rng):
    for _ in range(20):
        m = int(rng.integers(2, 6))
        g = rng.standard_normal((m, 3))
        lam0 = rng.dirichlet(np.ones(m))
        objs = [solve_min_norm(QpProblem(g, lam0, e)).objective
                for e in (0.0, 0.1, 0.3, 0.6, 1.0)]
        for small, large in zip(objs, objs[1:]):
            assert small >= large - 1e-9


def test_epsilon_zero_direction_is_exact_weighted_sum(rng):
    for _ in range(10):
        m = int(rng.integers(1, 6))
        g = rng.standard_normal((m, 5))
        lam0 = rng.dirichlet(np.ones(m))
        sol = solve_min_norm(QpProblem(g, lam0, 0.0))
        np.testing.assert_array_equal(sol.lam, lam0)
        np.testing.assert_array_equal(sol.direction, lam0 @ g)


def test_solution_invariant_under_user_permutation(rng):
    g = rng.standard_normal((5, 3))
    lam0 = rng.dirichlet(np.ones(5))
    perm = rng.permutation(5)
    a = solve_min_norm(QpProblem(g, lam0, 0.4))
    b = solve_min_norm(QpProblem(g[perm], lam0[perm], 0.4))
    assert a.objective == pytest.approx(b.objective, abs=1e-10)


def test_is_pareto_stationary():
    assert qp.is_pareto_stationary([vec(1, 0), vec(-1, 0)], tol=1e-6)
    assert not qp.is_pareto_stationary([vec(1, 0), vec(0, 1)], tol=1e-3)
    assert qp.is_pareto_stationary([vec(0, 0)], tol=1e-12)


def test_validation_errors():
    with pytest.raises(ArgumentError):
        QpProblem(np.zeros((0, 3)), np.zeros(0), 1.0)
    with pytest.raises(DimensionError):
        QpProblem(np.zeros((2, 3)), uniform_weights(3), 1.0)
    with pytest.raises(ArgumentError):
        QpProblem(np.zeros((2, 3)), uniform_weights(2), 1.5)
    with pytest.raises(ArgumentError):
        QpProblem(np.zeros((2, 3)), vec(0.9, 0.4), 1.0)  # not a simplex point
    with pytest.raises(ArgumentError):
        solve_min_norm(QpProblem(np.zeros((1, 2)), vec(1.0), 1.0), tol=0.0)


def test_backends_agree(rng):
    cy = pytest.importorskip("fedsim._qp_cy")
    for _ in range(60):
        prob = qp_reference.random_instance(rng)
        lo, hi = qp.box_bounds(prob.lambda0, prob.epsilon)
        G = np.ascontiguousarray(prob.gradients @ prob.gradients.T)
        args = (G, prob.lambda0, lo, hi, 1e-10, 10 * prob.m ** 2 + 1000)
        lam_py, _, _ = _qp_py.min_norm_kernel(*args)
        lam_cy, _, _ = cy.min_norm_kernel(*args)
        obj = lambda lam: float(np.sum((lam @ prob.gradients) ** 2))
        assert obj(lam_py) == pytest.approx(obj(lam_cy), abs=1e-10)
        v = rng.standard_normal(prob.m)
        np.testing.assert_allclose(_qp_py.project_kernel(v, lo, hi),
                                   cy.project_kernel(v, lo, hi), atol=1e-12)
