import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from helpers import ball, concave_bowl, ellipse, halfspace
from multiradial.exceptions import DegenerateNormal, NonInteriorCenter, ZeroDenominator
from multiradial.oracles import (ConvexIdentifier, FunctionObjective, MultiradialDual, SetOracle,
                                 argmax_first, gauge_subgradient, gauge_value, identifier_eval,
                                 phi_eval, primal_eval, radial_dual_subgradient, radial_dual_value,
                                 radial_transform, transform_gauges)
from multiradial.reference import bisection_gauge, bisection_radial

SQ2 = np.sqrt(2.0)

points2 = arrays(np.float64, 2, elements=st.floats(-5, 5, allow_nan=False))


def nonzero(x):
    return np.linalg.norm(x) > 1e-3


# --- gauges ------------------------------------------------------------------

def test_ball_gauge_examples():
    S = ball()
    assert gauge_value(S, [2.0, 0.0]) == pytest.approx(SQ2, abs=1e-11)
    assert gauge_value(S, [0.0, 0.0]) == 0.0
    assert gauge_value(S, [SQ2, 0.0]) == pytest.approx(1.0, abs=1e-11)


def test_gauge_subgradient_examples():
    g = gauge_subgradient(ball(), [2.0, 0.0])
    assert g.value == pytest.approx(SQ2, abs=1e-11)
    np.testing.assert_allclose(g.subgradient, [1 / SQ2, 0.0], atol=1e-10)
    g4 = gauge_subgradient(ball(), [4.0, 0.0])
    assert g4.value == pytest.approx(2 * SQ2, abs=1e-10)
    np.testing.assert_allclose(g4.subgradient, g.subgradient, atol=1e-10)
    ge = gauge_subgradient(ellipse(), [1.0, 0.0])
    assert ge.value == pytest.approx(SQ2, abs=1e-11)
    np.testing.assert_allclose(ge.subgradient, [SQ2, 0.0], atol=1e-9)


def test_gauge_subgradient_matches_finite_differences():
    S = ellipse()
    for x in ([1.0, 0.3], [-0.2, 2.0], [0.7, -0.7]):
        x = np.array(x)
        h = 1e-6
        fd = np.array([(gauge_value(S, x + h * e) - gauge_value(S, x - h * e)) / (2 * h)
                       for e in np.eye(2)])
        np.testing.assert_allclose(gauge_subgradient(S, x).subgradient, fd, rtol=1e-5)


def test_gauge_agrees_with_reference_bisection():
    S = ellipse()
    rng = np.random.default_rng(1)
    for x in rng.standard_normal((20, 2)):
        ref = bisection_gauge(S.contains, S.center, x)
        assert gauge_value(S, x) == pytest.approx(ref, rel=1e-11)


def test_halfspace_gauge_zero_along_unbounded_ray():
    S = halfspace()
    assert gauge_value(S, [-3.0, 1.0]) == 0.0
    assert gauge_value(S, [1.0, 0.0]) == pytest.approx(2.0, rel=1e-11)


def test_center_outside_set_raises():
    S = SetOracle(lambda x: 0.5 * x @ x <= 1.0, (5.0, 0.0), lambda x: x)
    with pytest.raises(NonInteriorCenter):
        gauge_value(S, [6.0, 0.0])


def test_faulty_normal_raises():
    S = SetOracle(lambda x: 0.5 * x @ x <= 1.0, (0.0, 0.0), lambda x: -x)
    with pytest.raises(DegenerateNormal):
        gauge_subgradient(S, [1.0, 0.0])


@settings(max_examples=60, deadline=None)
@given(points2.filter(nonzero), st.sampled_from([0.5, 2.0, 7.0]))
def test_gauge_homogeneity(x, t):
    for S in (ellipse(), ball(center=(0.3, -0.2))):
        e = S.center
        assert gauge_value(S, e + t * (x - e)) == pytest.approx(t * gauge_value(S, x),
                                                                rel=1e-9, abs=1e-9)


@settings(max_examples=80, deadline=None)
@given(points2)
def test_membership_iff_gauge_at_most_one(x):
    S = ellipse()
    assert S.contains(x) == (gauge_value(S, x) <= 1 + 1e-9) or \
        abs(gauge_value(S, x) - 1) < 1e-9


@settings(max_examples=60, deadline=None)
@given(points2.filter(nonzero))
def test_gauge_subgradient_identity(x):
    for S in (ellipse(), ball(center=(0.3, -0.2))):
        g = gauge_subgradient(S, x)
        assert g.subgradient @ (x - S.center) == pytest.approx(g.value, abs=1e-8)


# --- radial transform --------------------------------------------------------

def test_radial_dual_value_examples():
    f = concave_bowl()
    assert radial_dual_value(f, 1.0, [1.0, 0.0]) == pytest.approx((1 + np.sqrt(3)) / 2, rel=1e-11)
    assert radial_dual_value(f, 2.0, [1.0, 0.0]) == pytest.approx(1.0, rel=1e-11)
    for tau in (0.5, 1.0, 3.0):
        assert radial_dual_value(f, tau, [0.0, 0.0]) == pytest.approx(1.0 / tau)


def test_radial_dual_rejects_nonpositive_tau():
    with pytest.raises(ValueError):
        radial_dual_value(concave_bowl(), 0.0, [1.0, 0.0])


def test_radial_dual_subgradient_examples():
    f = concave_bowl()
    d = radial_dual_subgradient(f, 1.0, [1.0, 0.0])
    np.testing.assert_allclose(d.subgradient, [1 / np.sqrt(3), 0.0], atol=1e-9)
    lin = FunctionObjective(lambda x: 1.0 - x[0], lambda x: np.array([-1.0, 0.0]), (0.0, 0.0))
    d = radial_dual_subgradient(lin, 1.0, [0.5, 0.0])
    assert d.value == pytest.approx(1.5, rel=1e-11)
    np.testing.assert_allclose(d.subgradient, [1.0, 0.0], atol=1e-9)
    d = radial_dual_subgradient(f, 1.0, [0.0, 0.0])
    np.testing.assert_allclose(d.subgradient, [0.0, 0.0], atol=1e-12)


def test_radial_dual_subgradient_finite_differences():
    f = concave_bowl(center=(0.2, -0.1))
    h = 1e-6
    for tau in (0.5, 1.0, 2.5):
        for y in ([1.0, 0.0], [-0.4, 0.9], [2.0, 3.0]):
            y = np.array(y)
            fd = np.array([(radial_dual_value(f, tau, y + h * e)
                            - radial_dual_value(f, tau, y - h * e)) / (2 * h) for e in np.eye(2)])
            g = radial_dual_subgradient(f, tau, y).subgradient
            assert np.linalg.norm(g - fd) <= 1e-5 * max(np.linalg.norm(fd), 1.0)


def test_linear_objective_empty_region_falls_back():
    # f = 1 - x1 is positive on x1 < 1; the transform vanishes where 1 + y1 <= 0
    lin = FunctionObjective(lambda x: 1.0 - x[0], lambda x: np.array([-1.0, 0.0]), (0.0, 0.0))
    y = np.array([-2.0, 0.0])
    assert radial_dual_value(lin, 1.0, y) == 0.0
    d = radial_dual_subgradient(lin, 1.0, y)
    assert d.value == 0.0
    with pytest.raises(ZeroDenominator):
        radial_dual_subgradient(lin, 1.0, y, fallback=False)


def test_radial_transform_at_center():
    assert radial_transform(lambda x: 4.0 - x @ x, np.zeros(2), np.zeros(2)) == 0.25


@settings(max_examples=40, deadline=None)
@given(points2, st.floats(0.1, 10.0))
def test_rescaling_rule(y, tau):
    f = concave_bowl(center=(0.3, 0.1))
    e = f.center
    lhs = bisection_radial(lambda x: tau * f.value(x), e, y)
    rhs = bisection_radial(f.value, e, e + tau * (y - e)) / tau
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)
    assert radial_dual_value(f, tau, y) == pytest.approx(lhs, rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, 2, elements=st.floats(-1.3, 1.3)))
def test_involution(x):
    f = concave_bowl()
    e = f.center
    if f.value(x) <= 1e-3:
        return
    dual = lambda y: radial_transform(f.value, e, y)  # noqa: E731
    back = bisection_radial(dual, e, x)
    assert back == pytest.approx(f.value(x), abs=1e-8)


@settings(max_examples=40, deadline=None)
@given(points2)
def test_min_max_rule(y):
    f1 = lambda x: 1.0 - 0.5 * x @ x  # noqa: E731
    f2 = lambda x: 2.0 - x[0] - 0.25 * x @ np.diag([3.0, 1.0]) @ x  # noqa: E731
    e = np.zeros(2)
    lhs = bisection_radial(lambda x: min(f1(x), f2(x)), e, y)
    rhs = max(bisection_radial(f1, e, y), bisection_radial(f2, e, y))
    assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-8)


# --- identifiers and the dual ---------------------------------------------------

def test_transform_gauges_huber_examples():
    v, _ = transform_gauges("huber", [0.5], [[1.0, 0.0]])
    assert v[0] == pytest.approx(0.625)
    v, g = transform_gauges("huber", [1.0], [[1.0, 0.0]])
    assert v[0] == 1.0
    np.testing.assert_allclose(g[0], [1.0, 0.0])
    v, g = transform_gauges("squared", [3.0], [[1.0, 2.0]])
    assert v[0] == 9.0
    np.testing.assert_allclose(g[0], [6.0, 12.0])


def test_huber_identifier_single_ball():
    ident = ConvexIdentifier("huber", [ball(radius=2.0)])
    assert identifier_eval(ident, [1.0, 0.0]).value == pytest.approx(0.625, abs=1e-11)
    assert identifier_eval(ident, [2.0, 0.0]).value == pytest.approx(1.0, abs=1e-11)
    assert identifier_eval(ident, [6.0, 0.0]).value == pytest.approx(3.0, abs=1e-10)


def test_max_gauges_two_balls():
    ident = ConvexIdentifier("max", [ball(), ball(radius=1.0)])
    d = identifier_eval(ident, [1.0, 0.0])
    assert d.value == pytest.approx(1.0, abs=1e-11)
    assert d.active == 2


def test_identifier_needs_components():
    with pytest.raises(ValueError):
        identifier_eval(ConvexIdentifier("max", []), [1.0, 0.0])


def test_argmax_first_breaks_ties_low():
    assert argmax_first([1.0, 1.0 + 1e-13, 0.5]) == 0
    assert argmax_first([0.2, 1.0, 1.0]) == 1


def test_phi_examples():
    f = concave_bowl()
    ident = ConvexIdentifier("max", [ball()])
    d = phi_eval(f, ident, 1.0, [0.0, 0.0])
    assert (d.value, d.active) == (pytest.approx(1.0), 0)
    d = phi_eval(f, ident, 1.0, [2.0, 0.0])
    assert d.value == pytest.approx(2.0, abs=1e-10) and d.active == 0
    d = phi_eval(f, ident, 2.0, [1.0, 0.0])
    assert d.value == pytest.approx(1.0, abs=1e-10) and d.active == 0
    d = phi_eval(f, ConvexIdentifier("max", [ball(radius=1.0)]), 10.0, [1.0, 1.0])
    assert d.active == 1 and d.value == pytest.approx(SQ2, abs=1e-10)


def test_primal_examples():
    obj = FunctionObjective(lambda x: 3.0, lambda x: np.zeros(2), (0.0, 0.0))
    cons = [ball()]
    assert primal_eval(obj, cons, 1.0, [0.5, 0.0]) == 3.0
    assert primal_eval(obj, cons, 1.0, [5.0, 0.0]) == 0.0
    assert primal_eval(obj, cons, 0.5, [0.5, 0.0]) == 1.5


@settings(max_examples=50, deadline=None)
@given(points2, points2)
def test_identifier_lipschitz(x, y):
    # inscribed radii: sqrt(2) for the ball, 1/sqrt(2) for the ellipse
    ident = ConvexIdentifier("max", [ball(), ellipse()])
    R = 1 / SQ2
    dx = identifier_eval(ident, x).value - identifier_eval(ident, y).value
    assert abs(dx) <= np.linalg.norm(x - y) / R + 1e-9


@settings(max_examples=40, deadline=None)
@given(points2, points2, st.floats(0.2, 5.0))
def test_phi_lipschitz(x, y, tau):
    # the objective transform (1 + sqrt(1 + tau ||y||^2)) / (2 tau) has slope
    # at most 1/(2 sqrt(tau))
    f = concave_bowl()
    ident = ConvexIdentifier("max", [ball(), ellipse()])
    L = max(SQ2, 0.5 / np.sqrt(tau))
    d = phi_eval(f, ident, tau, x).value - phi_eval(f, ident, tau, y).value
    assert abs(d) <= L * np.linalg.norm(x - y) + 1e-9


def test_multiradial_dual_components_and_kinds():
    dual = MultiradialDual(concave_bowl(), [ball(), ellipse()])
    vals, grads = dual.components(np.array([1.0, 0.0]), 1.0)
    np.testing.assert_allclose(vals, [(1 + np.sqrt(3)) / 2, 1 / SQ2, SQ2], atol=1e-10)
    assert grads.shape == (3, 2)
    sq = dual.with_kind("squared")
    v2, _ = sq.components(np.array([1.0, 0.0]), 1.0)
    np.testing.assert_allclose(v2[1:], vals[1:] ** 2, atol=1e-10)
    assert v2[0] == pytest.approx(vals[0])
    vinf, _ = dual.components(np.array([2.0, 0.0]), np.inf)
    assert vinf[0] == pytest.approx(SQ2, abs=1e-10)
    assert dual.feasible([0.1, 0.1]) and not dual.feasible([3.0, 0.0])
    assert dual.centers.shape == (3, 2)
