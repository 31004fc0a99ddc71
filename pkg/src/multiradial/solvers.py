"""First-order methods for minimizing a finite maximum h = max_j h_j.

Three methods share an ``initialize`` / ``step`` interface:

* ``subgrad``  -- y+ = y - eps g / ||g||^2 with g from an active component;
* ``smooth``   -- accelerated gradient on the log-sum-exp smoothing h_theta
                  with theta = eps / (2 log(m+1));
* ``genGrad``  -- accelerated generalized-gradient method, whose step solves
                  a small QP over the simplex of component weights.

Both accelerated methods estimate the smoothness constant by backtracking
(double on failure, halve after each accepted step).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .exceptions import BacktrackOverflow
from .oracles import DualEval, IdentifierKind, argmax_first

T0 = (math.sqrt(5.0) - 1.0) / 2.0


# ----------------------------------------------------------------------------
# Problems


class FomProblem:
    """Phi_tau of a dual object, seen as a finite max of m+1 components."""

    def __init__(self, dual, tau):
        self.dual = dual
        self.tau = tau
        self.n_components = dual.n_components

    def eval_all(self, y):
        return self.dual.components(y, self.tau)

    def eval_max(self, y):
        vals, grads = self.eval_all(y)
        j = argmax_first(vals)
        return DualEval(float(vals[j]), grads[j], j)

    def value(self, y):
        return float(np.max(self.eval_all(y)[0]))


class FiniteMax(FomProblem):
    """max of explicit components, each a callable y -> (value, gradient)."""

    def __init__(self, funcs: Sequence[Callable]):
        self.funcs = list(funcs)
        self.n_components = len(self.funcs)

    def eval_all(self, y):
        out = [f(np.asarray(y, dtype=float)) for f in self.funcs]
        vals = np.array([v for v, _ in out], dtype=float)
        grads = np.array([np.atleast_1d(g) for _, g in out], dtype=float)
        return vals, grads


# ----------------------------------------------------------------------------
# States and configuration


@dataclass(frozen=True)
class SubgradState:
    y: np.ndarray
    eps: float
    converged: bool = False
    steps: int = 0


@dataclass(frozen=True)
class AccelState:
    y: np.ndarray
    z: np.ndarray
    t: float
    L: float
    eps: float
    theta: Optional[float] = None
    lam: Optional[np.ndarray] = None
    converged: bool = False
    steps: int = 0


@dataclass(frozen=True)
class AccelConfig:
    backtracking: bool = True
    L0: float = 1.0
    L_min: float = 1e-8
    max_doublings: int = 60
    qp_tol: float = 1e-10
    qp_max_iter: int = 20_000


DEFAULT_ACCEL = AccelConfig()


def next_momentum(t):
    """t_{i+1} from t_{i+1}^2 = (1 - t_i) t_i^2 and the extrapolation weight."""
    t1 = t * math.sqrt(1.0 - t)
    beta = t * (1.0 - t) / (t * t + t1)
    return t1, beta


def _slack(value):
    return 1e-13 * (1.0 + abs(value))


# ----------------------------------------------------------------------------
# Subgradient method


def subgrad_init(x, eps):
    return SubgradState(np.array(x, dtype=float), float(eps))


def subgrad_step(state: SubgradState, problem) -> SubgradState:
    if state.converged:
        return state
    g = problem.eval_max(state.y).subgradient
    gg = float(g @ g)
    if gg == 0.0:
        return replace(state, converged=True)
    return replace(state, y=state.y - (state.eps / gg) * g, steps=state.steps + 1)


# ----------------------------------------------------------------------------
# Log-sum-exp smoothing


def smoothing_theta(eps, n_components):
    if n_components < 2:
        return eps / 2.0
    return eps / (2.0 * math.log(n_components))


def smoothed_eval(problem, theta, y):
    """theta log sum_j exp(h_j / theta), shifted by the max for stability."""
    vals, grads = problem.eval_all(y)
    top = vals.max()
    w = np.exp((vals - top) / theta)
    total = w.sum()
    value = top + theta * math.log(total)
    return float(value), (w / total) @ grads


def smooth_init(x, eps, problem, L=None, config=DEFAULT_ACCEL):
    x = np.array(x, dtype=float)
    theta = smoothing_theta(eps, problem.n_components)
    return AccelState(x, x.copy(), T0, config.L0 if L is None else L, float(eps), theta)


def smooth_step(state: AccelState, problem, config=DEFAULT_ACCEL) -> AccelState:
    if state.converged:
        return state
    theta = state.theta
    z = state.z
    hz, gz = smoothed_eval(problem, theta, z)
    gg = float(gz @ gz)
    if gg == 0.0:
        return replace(state, y=z, converged=True)
    L = state.L
    for _ in range(config.max_doublings + 1):
        y1 = z - gz / L
        h1, _ = smoothed_eval(problem, theta, y1)
        if not config.backtracking or h1 <= hz - gg / (2.0 * L) + _slack(hz):
            break
        L *= 2.0
    else:
        raise BacktrackOverflow(f"smoothness estimate exceeded {L:g}")
    return _momentum_update(state, y1, L, config)


def _momentum_update(state, y1, L, config, lam=None):
    t1, beta = next_momentum(state.t)
    z1 = y1 + beta * (y1 - state.y)
    if config.backtracking:
        L = max(0.5 * L, config.L_min)
    return replace(state, y=y1, z=z1, t=t1, L=L, lam=lam, steps=state.steps + 1)


# ----------------------------------------------------------------------------
# Generalized gradient method


def project_simplex(v):
    """Euclidean projection onto {x >= 0, sum x = 1}."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, v.size + 1)
    rho = np.flatnonzero(u - css / k > 0)[-1]
    shift = css[rho] / (rho + 1.0)
    x = np.maximum(v - shift, 0.0)
    return x / x.sum()


def _projected_grad_norm(Q, h, alpha, lam, lip):
    g = alpha * (Q @ lam) - h
    return lip * float(np.linalg.norm(lam - project_simplex(lam - g / lip)))


def _polish(Q, h, alpha, lam):
    """Solve the KKT system on the support of lam; None if that leaves the simplex."""
    A = np.flatnonzero(lam > 0.0)
    k = A.size
    M = np.zeros((k + 1, k + 1))
    M[:k, :k] = alpha * Q[np.ix_(A, A)]
    M[:k, k] = 1.0
    M[k, :k] = 1.0
    rhs = np.append(h[A], 1.0)
    sol = np.linalg.lstsq(M, rhs, rcond=None)[0]
    if np.any(sol[:k] < 0.0):
        return None
    out = np.zeros_like(lam)
    out[A] = sol[:k]
    return out / out.sum()


def simplex_qp(values, grads, alpha, tol=1e-10, lam0=None, max_iter=20_000):
    """Weights for the generalized gradient mapping.

    Maximizes  sum_j lam_j h_j - (alpha/2) ||sum_j lam_j g_j||^2  over the
    simplex by accelerated projected gradient with adaptive restart.  Every
    few iterations the KKT system on the current support is solved exactly,
    which finishes the job once the support is right.  Stops when the
    projected-gradient norm is at most ``tol`` times the problem scale
    max(1, |h|_inf, alpha ||Q||).  Returns ``(lam, offset)`` with
    ``offset = -alpha * sum_j lam_j g_j``.
    """
    h = np.asarray(values, dtype=float)
    G = np.atleast_2d(np.asarray(grads, dtype=float))
    k = h.size
    if k == 1:
        return np.ones(1), -alpha * G[0]
    Q = G @ G.T
    if k <= 64:
        lip = alpha * float(np.linalg.eigvalsh(Q)[-1])
    else:
        lip = alpha * float(np.linalg.norm(Q))
    top = np.zeros(k)
    top[argmax_first(h)] = 1.0
    if lip <= 0.0:
        # all gradients vanish: put the weight on the largest value
        return top, np.zeros(G.shape[1])
    lam = top if lam0 is None or lam0.size != k else project_simplex(lam0)
    thr = tol * max(1.0, float(np.abs(h).max()), lip)
    step = 1.0 / lip

    def done(cand):
        return cand is not None and _projected_grad_norm(Q, h, alpha, cand, lip) <= thr

    for cand in (lam, _polish(Q, h, alpha, lam)):
        if done(cand):
            return cand, -alpha * (cand @ G)
    prev = mom = lam
    t = 1.0
    obj_prev = np.inf
    for it in range(1, max_iter + 1):
        new = project_simplex(mom - step * (alpha * (Q @ mom) - h))
        obj = 0.5 * alpha * new @ Q @ new - h @ new
        if obj > obj_prev:
            # restart momentum when the objective goes up
            mom, t = lam, 1.0
        else:
            obj_prev = obj
            t1 = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
            prev, lam = lam, new
            mom = lam + ((t - 1.0) / t1) * (lam - prev)
            t = t1
        if it % 5 == 0:
            if done(lam):
                break
            cand = _polish(Q, h, alpha, lam)
            if done(cand):
                lam = cand
                break
    return lam, -alpha * (lam @ G)


def simplex_qp_objective(values, grads, alpha, lam):
    s = np.asarray(lam) @ np.atleast_2d(grads)
    return float(np.asarray(lam) @ np.asarray(values) - 0.5 * alpha * s @ s)


def gengrad_init(x, eps, problem, L=None, config=DEFAULT_ACCEL):
    x = np.array(x, dtype=float)
    return AccelState(x, x.copy(), T0, config.L0 if L is None else L, float(eps))


def gengrad_step(state: AccelState, problem, config=DEFAULT_ACCEL) -> AccelState:
    if state.converged:
        return state
    z = state.z
    vals, grads = problem.eval_all(z)
    L = state.L
    lam = state.lam
    for _ in range(config.max_doublings + 1):
        lam, off = simplex_qp(vals, grads, 1.0 / L, config.qp_tol, lam, config.qp_max_iter)
        y1 = z + off
        model = float(np.max(vals + grads @ off) + 0.5 * L * (off @ off))
        h1 = float(np.max(problem.eval_all(y1)[0]))
        if not config.backtracking or h1 <= model + _slack(model):
            break
        L *= 2.0
    else:
        raise BacktrackOverflow(f"smoothness estimate exceeded {L:g}")
    return _momentum_update(state, y1, L, config, lam)


# ----------------------------------------------------------------------------
# Uniform interface


class FirstOrderMethod:
    """A named method with its matching identifier kind.

    ``initialize(x, eps, problem, previous=None)`` starts (or restarts) at
    ``x``; a previous state's smoothness estimate is carried over.
    """

    name = ""
    identifier = IdentifierKind.MAX_GAUGES

    def __init__(self, config: AccelConfig = DEFAULT_ACCEL):
        self.config = config

    def initialize(self, x, eps, problem, previous=None):
        raise NotImplementedError

    def step(self, state, problem):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}()"


class Subgradient(FirstOrderMethod):
    name = "subgrad"
    identifier = IdentifierKind.MAX_GAUGES

    def initialize(self, x, eps, problem, previous=None):
        return subgrad_init(x, eps)

    def step(self, state, problem):
        return subgrad_step(state, problem)


class Smoothing(FirstOrderMethod):
    name = "smooth"
    identifier = IdentifierKind.HUBER

    def initialize(self, x, eps, problem, previous=None):
        L = previous.L if previous is not None else None
        return smooth_init(x, eps, problem, L, self.config)

    def step(self, state, problem):
        return smooth_step(state, problem, self.config)


class GeneralizedGradient(FirstOrderMethod):
    name = "genGrad"
    identifier = IdentifierKind.MAX_SQUARED

    def initialize(self, x, eps, problem, previous=None):
        L = previous.L if previous is not None else None
        return gengrad_init(x, eps, problem, L, self.config)

    def step(self, state, problem):
        return gengrad_step(state, problem, self.config)


SOLVERS = {cls.name: cls for cls in (Subgradient, Smoothing, GeneralizedGradient)}


def make_solver(name, config: AccelConfig = DEFAULT_ACCEL) -> FirstOrderMethod:
    try:
        return SOLVERS[name](config)
    except KeyError:
        raise ValueError(f"unknown solver {name!r}; choose from {sorted(SOLVERS)}") from None
