import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from multiradial.exceptions import BacktrackOverflow
from multiradial.qcqp import QcqpDual, generate_instance
from multiradial.reference import finite_diff_check, grid_simplex_qp
from multiradial.solvers import (SOLVERS, T0, AccelConfig, FiniteMax, FomProblem, make_solver,
                                 next_momentum, project_simplex, simplex_qp, simplex_qp_objective,
                                 smooth_init, smooth_step, smoothed_eval, smoothing_theta,
                                 subgrad_init, subgrad_step)


def affine(value, grad):
    grad = np.asarray(grad, dtype=float)
    return lambda y: (value + grad @ y, grad)


def parabola(center, scale=1.0):
    center = np.asarray(center, dtype=float)
    return lambda y: (0.5 * scale * (y - center) @ (y - center), scale * (y - center))


@pytest.fixture(scope="module")
def qcqp_problem():
    inst = generate_instance(20, 5, seed=3)
    return FomProblem(QcqpDual(inst), 0.8)


# --- subgradient ---------------------------------------------------------------

def test_subgrad_step_examples():
    prob = FiniteMax([lambda y: (0.0, np.array([2.0, 0.0]))])
    s = subgrad_step(subgrad_init([0.0, 0.0], 0.1), prob)
    np.testing.assert_allclose(s.y, [-0.05, 0.0])
    prob = FiniteMax([lambda y: (0.0, np.array([0.6, 0.8]))])
    s = subgrad_step(subgrad_init([1.0, 1.0], 0.5), prob)
    assert np.linalg.norm(s.y - [1.0, 1.0]) == pytest.approx(0.5)


def test_subgrad_zero_subgradient_flags_convergence():
    prob = FiniteMax([lambda y: (1.0, np.zeros(2))])
    s0 = subgrad_init([3.0, 4.0], 0.1)
    s1 = subgrad_step(s0, prob)
    assert s1.converged and np.array_equal(s1.y, s0.y)
    assert subgrad_step(s1, prob) is s1


def test_subgrad_reaches_accuracy_on_norm():
    def norm(y):
        r = np.linalg.norm(y)
        return r, (y / r if r > 0 else np.zeros_like(y))
    prob = FiniteMax([norm])
    s = subgrad_init([0.6, 0.8], 0.1)
    best = np.inf
    for _ in range(100):
        best = min(best, prob.value(s.y))
        s = subgrad_step(s, prob)
    assert best <= 0.1


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, 2, elements=st.floats(-5, 5)), st.floats(1e-3, 1.0))
def test_subgrad_step_moves_at_most_eps_over_grad_norm(y, eps):
    prob = FiniteMax([parabola([1.0, 0.0]), parabola([-1.0, 0.5], 2.0), affine(-3.0, [0.5, 1])])
    g = prob.eval_max(y).subgradient
    if g @ g == 0:
        return
    s = subgrad_step(subgrad_init(y, eps), prob)
    ystar = np.zeros(2)
    bound = np.linalg.norm(y - ystar) + eps / np.linalg.norm(g)
    assert np.linalg.norm(s.y - ystar) <= bound + 1e-12


# --- smoothing -----------------------------------------------------------------

def test_smoothing_theta_example():
    assert smoothing_theta(0.1, 4) == pytest.approx(0.0360674, abs=1e-7)
    assert smoothing_theta(0.1, 1) == 0.05


def test_smoothed_eval_tie():
    prob = FiniteMax([affine(2.0, [1.0, 0.0]), affine(2.0, [0.0, 3.0])])
    v, g = smoothed_eval(prob, 0.01, np.zeros(2))
    assert v == pytest.approx(2.0 + 0.01 * math.log(2))
    np.testing.assert_allclose(g, [0.5, 1.5])


def test_smoothed_eval_overflow_safe():
    prob = FiniteMax([affine(1e6, [1.0]), affine(1e6 - 1.0, [-1.0])])
    v, g = smoothed_eval(prob, 1e-3, np.zeros(1))
    assert np.isfinite(v) and v == pytest.approx(1e6)
    np.testing.assert_allclose(g, [1.0])


def test_smoothing_error_within_half_eps(qcqp_problem):
    rng = np.random.default_rng(0)
    K = qcqp_problem.n_components
    for eps in (0.1, 0.01):
        theta = smoothing_theta(eps, K)
        for y in rng.standard_normal((100, 20)):
            hv = qcqp_problem.value(y)
            ht, _ = smoothed_eval(qcqp_problem, theta, y)
            assert hv <= ht <= hv + eps / 2 + 1e-12


def test_smoothed_gradient_finite_differences(qcqp_problem):
    pts = np.random.default_rng(1).standard_normal((5, 20))
    theta = smoothing_theta(0.1, qcqp_problem.n_components)
    err = finite_diff_check(lambda y: smoothed_eval(qcqp_problem, theta, y)[0],
                            lambda y: smoothed_eval(qcqp_problem, theta, y)[1], pts, h=1e-6)
    assert err <= 1e-5


def test_momentum_constants():
    assert T0 == pytest.approx(0.618034, abs=1e-6)
    t1, beta = next_momentum(T0)
    assert t1 == pytest.approx(0.381966, abs=1e-6)
    assert t1 == pytest.approx(T0**2, rel=1e-14)
    assert beta == pytest.approx(0.309017, abs=1e-6)


def test_smooth_rate_envelope_on_quadratic():
    A = np.diag([10.0, 1.0, 0.1])
    prob = FiniteMax([lambda y: (0.5 * y @ A @ y, A @ y)])
    y0 = np.array([1.0, -2.0, 3.0])
    L, D = 10.0, np.linalg.norm(y0)
    s = smooth_init(y0, 1e-3, prob)
    for i in range(1, 201):
        s = smooth_step(s, prob)
        assert prob.value(s.y) <= 4 * 2 * L * D**2 / (i + 1) ** 2


def test_smooth_backtrack_overflow():
    prob = FiniteMax([lambda y: (float(y[0]), np.array([-1.0]))])
    with pytest.raises(BacktrackOverflow):
        smooth_step(smooth_init([1.0], 0.1, prob), prob, AccelConfig(max_doublings=5))


# --- simplex QP ----------------------------------------------------------------

def test_simplex_qp_examples():
    lam, off = simplex_qp([0.0, 0.0], [[1.0], [-1.0]], 1.0)
    np.testing.assert_allclose(lam, [0.5, 0.5], atol=1e-12)
    np.testing.assert_allclose(off, [0.0], atol=1e-12)
    lam, off = simplex_qp([3.0], [[2.0, -1.0]], 0.5)
    np.testing.assert_array_equal(lam, [1.0])
    np.testing.assert_array_equal(off, [-1.0, 0.5])
    lam, off = simplex_qp([10.0, 0.0], [[1.0], [1.0]], 1.0)
    np.testing.assert_array_equal(lam, [1.0, 0.0])
    np.testing.assert_allclose(off, [-1.0])


def test_grid_oracle_examples():
    v, lam = grid_simplex_qp([0.0, 0.0], [[1.0], [-1.0]], 1.0)
    np.testing.assert_allclose(lam, [0.5, 0.5])
    assert v == 0.0
    v, lam = grid_simplex_qp([10.0, 0.0], [[1.0], [1.0]], 1.0)
    np.testing.assert_allclose(lam, [1.0, 0.0])


def brute_force_three(h, G, alpha, step):
    best = -np.inf
    for a in np.arange(int(round(1 / step)) + 1) * step:
        b = np.arange(int(round((1 - a) / step)) + 1) * step
        lam = np.stack([np.full_like(b, a), b, 1 - a - b], 1)
        best = max(best, np.max(lam @ h - 0.5 * alpha * np.sum((lam @ G) ** 2, 1)))
    return best


def test_grid_oracle_row_reduction_matches_brute_force():
    rng = np.random.default_rng(3)
    for _ in range(5):
        h, G = rng.standard_normal(3), rng.standard_normal((3, 2))
        v, _ = grid_simplex_qp(h, G, 0.7, step=1e-2)
        assert v == pytest.approx(brute_force_three(h, G, 0.7, 1e-2), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 3), st.integers(0, 2**31), st.floats(0.01, 10.0))
def test_simplex_qp_against_grid(k, seed, alpha):
    rng = np.random.default_rng(seed)
    h, G = rng.standard_normal(k), rng.standard_normal((k, 4))
    lam, off = simplex_qp(h, G, alpha)
    assert np.all(lam >= 0) and abs(lam.sum() - 1.0) <= 1e-12
    np.testing.assert_allclose(off, -alpha * lam @ G, rtol=1e-13, atol=1e-14)
    got = simplex_qp_objective(h, G, alpha, lam)
    grid, _ = grid_simplex_qp(h, G, alpha, step=1e-3)
    assert got >= grid - 1e-10


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.integers(1, 12), elements=st.floats(-50, 50)))
def test_project_simplex(v):
    p = project_simplex(v)
    assert np.all(p >= 0) and abs(p.sum() - 1) <= 1e-12
    # optimality: p - v is constant on the support and no smaller off it
    shift = (p - v)[p > 0]
    assert np.ptp(shift) <= 1e-9 * (1 + np.abs(v).max())
    assert np.all((p - v)[p == 0] >= shift.max() - 1e-9 * (1 + np.abs(v).max()))


def test_simplex_qp_many_components(qcqp_problem):
    vals, grads = qcqp_problem.eval_all(np.random.default_rng(7).standard_normal(20))
    lam, _ = simplex_qp(vals, grads, 0.05)
    assert np.all(lam >= 0) and abs(lam.sum() - 1) <= 1e-12
    # no single vertex does better
    best_vertex = max(simplex_qp_objective(vals, grads, 0.05, e) for e in np.eye(len(vals)))
    assert simplex_qp_objective(vals, grads, 0.05, lam) >= best_vertex - 1e-12


# --- generalized gradient ------------------------------------------------------

def plain_accelerated_gradient(grad, y0, L, steps):
    y = z = np.asarray(y0, dtype=float)
    t = (math.sqrt(5) - 1) / 2
    out = []
    for _ in range(steps):
        y1 = z - grad(z) / L
        t1 = t * math.sqrt(1 - t)
        beta = t * (1 - t) / (t * t + t1)
        z = y1 + beta * (y1 - y)
        y, t = y1, t1
        out.append(y)
    return out


def test_gengrad_single_component_is_accelerated_gradient():
    A = np.array([[3.0, 1.0], [1.0, 2.0]])
    prob = FiniteMax([lambda y: (0.5 * y @ A @ y, A @ y)])
    L = float(np.linalg.eigvalsh(A)[-1])
    cfg = AccelConfig(backtracking=False, L0=L)
    method = make_solver("genGrad", cfg)
    s = method.initialize([2.0, -1.0], 1e-6, prob)
    ref = plain_accelerated_gradient(lambda y: A @ y, [2.0, -1.0], L, 30)
    for expected in ref:
        s = method.step(s, prob)
        np.testing.assert_allclose(s.y, expected, rtol=1e-13, atol=1e-15)


def test_gengrad_symmetric_max_is_stationary():
    prob = FiniteMax([affine(0.0, [1.0]), affine(0.0, [-1.0])])
    method = make_solver("genGrad")
    s = method.step(method.initialize([0.0], 0.1, prob), prob)
    np.testing.assert_allclose(s.y, [0.0], atol=1e-12)


@pytest.mark.parametrize("backtracking", [False, True])
def test_gengrad_rate_on_two_parabolas(backtracking):
    prob = FiniteMax([parabola([1.0, 0.0]), parabola([-1.0, 0.0])])
    h_star, eps = 0.5, 1e-4
    y0 = np.array([3.0, 4.0])
    D, L = np.linalg.norm(y0), 1.0
    bound = 2 * math.sqrt(L * D**2 / eps)
    method = make_solver("genGrad", AccelConfig(backtracking=backtracking))
    s = method.initialize(y0, eps, prob)
    for i in range(1, int(bound) + 1):
        s = method.step(s, prob)
        if prob.value(s.y) - h_star <= eps:
            break
    assert prob.value(s.y) - h_star <= eps
    assert i <= bound


def test_gengrad_backtrack_overflow():
    prob = FiniteMax([lambda y: (float(y[0]), np.array([-1.0]))])
    method = make_solver("genGrad", AccelConfig(max_doublings=5))
    with pytest.raises(BacktrackOverflow):
        method.step(method.initialize([1.0], 0.1, prob), prob)


@pytest.mark.parametrize("name", sorted(SOLVERS))
def test_step_is_deterministic(name, qcqp_problem):
    method = make_solver(name)
    s = method.initialize(np.ones(20), 0.05, qcqp_problem)
    for _ in range(3):
        s = method.step(s, qcqp_problem)
    a, b = method.step(s, qcqp_problem), method.step(s, qcqp_problem)
    np.testing.assert_array_equal(a.y, b.y)
    if hasattr(a, "z"):
        np.testing.assert_array_equal(a.z, b.z)
        assert a.L == b.L and a.t == b.t


def test_restart_carries_smoothness_estimate(qcqp_problem):
    method = make_solver("smooth")
    s = method.initialize(np.ones(20), 0.05, qcqp_problem)
    for _ in range(5):
        s = method.step(s, qcqp_problem)
    fresh = method.initialize(s.y, 0.01, qcqp_problem, previous=s)
    assert fresh.L == s.L and fresh.t == T0
    np.testing.assert_array_equal(fresh.z, s.y)


def test_make_solver():
    assert {"subgrad", "smooth", "genGrad"} == set(SOLVERS)
    assert make_solver("smooth").identifier.value == "huber"
    assert make_solver("genGrad").identifier.value == "squared"
    assert make_solver("subgrad").identifier.value == "max"
    with pytest.raises(ValueError):
        make_solver("newton")
