"""Convex QCQPs: closed-form gauges and radial duals, instance generation.

Every quadratic is stored as ``f(x) = r - q^T x - 1/2 x^T P x`` with P
symmetric PSD.  The objective is maximized and each constraint reads
``f_j(x) >= 0``.  Gauges and radial transforms of these functions solve a
scalar quadratic, so each evaluation costs one matrix-vector product.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.sparse.linalg import cg

from .exceptions import CenterNotStrict, NotPositiveDefinite
from .oracles import (ConstraintOracle, IdentifierKind, ObjectiveOracle,
                      transform_gauges)

SIGMA_OBJECTIVE = 10.0
SIGMA_CONSTRAINT = 1.0
RIDGE = 0.01


@dataclass(frozen=True)
class QuadraticFunction:
    P: np.ndarray
    q: np.ndarray
    r: float

    def __post_init__(self):
        P = np.atleast_2d(np.asarray(self.P, dtype=float))
        q = np.atleast_1d(np.asarray(self.q, dtype=float))
        if P.shape != (q.size, q.size):
            raise ValueError(f"P has shape {P.shape}, expected {(q.size, q.size)}")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "r", float(self.r))

    @property
    def dim(self):
        return self.q.size

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.r - x @ self.q - 0.5 * np.sum(x * (x @ self.P), axis=-1)

    def gradient(self, x):
        return -self.q - np.asarray(x, dtype=float) @ self.P

    def check(self, tol=1e-10):
        """Raise ValueError unless P is symmetric and PSD within ``tol``."""
        if not np.allclose(self.P, self.P.T, atol=1e-12, rtol=0):
            raise ValueError("P is not symmetric")
        if np.linalg.eigvalsh(self.P)[0] < -tol:
            raise ValueError("P is not positive semidefinite")

    def to_dict(self):
        return {"P": self.P.ravel().tolist(), "q": self.q.tolist(), "r": self.r}

    @classmethod
    def from_dict(cls, data):
        q = np.asarray(data["q"], dtype=float)
        P = np.asarray(data["P"], dtype=float).reshape(q.size, q.size)
        return cls(P, q, data["r"])


def quad_eval(f: QuadraticFunction, x):
    """Value and gradient of ``f`` at ``x`` from a single product ``P x``."""
    x = np.asarray(x, dtype=float)
    Px = x @ f.P
    value = f.r - x @ f.q - 0.5 * np.sum(x * Px, axis=-1)
    return value, -f.q - Px


def _radial_root(F, c, P, offset, d, with_grad=False):
    """Positive root v of F v^2 + (c.d - offset) v - 1/2 d^T P d = 0.

    offset = 1 gives the radial transform of a quadratic with F = f(e) and
    c = grad f(e); offset = 0 gives the gauge of {f >= 0}.  The root is
    formed without cancellation on either sign of ``offset - c.d``.
    """
    Pd = d @ P
    W = np.sum(d * Pd, axis=-1)
    a = offset - d @ c
    disc = np.maximum(a * a + 2.0 * F * W, 0.0)
    s = np.sqrt(disc)
    with np.errstate(divide="ignore", invalid="ignore"):
        num = np.where(a >= 0, a + s, 2.0 * F * np.maximum(W, 0.0) / (s - a))
    num = np.where(s > 0, num, 0.0)
    value = num / (2.0 * F)
    if not with_grad:
        return value
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(s > 0, num / s, 0.0)
        inv_s = np.where(s > 0, 1.0 / s, 0.0)
    grad = (-np.multiply.outer(ratio, c) + 2.0 * F * inv_s[..., None] * Pd) / (2.0 * F)
    return value, grad


def _center_data(f: QuadraticFunction, e):
    e = np.asarray(e, dtype=float)
    fe, ce = quad_eval(f, e)
    if not fe > 0:
        raise CenterNotStrict(f"f(e) = {fe} is not positive")
    return e, float(fe), ce


def qcqp_gauge(f: QuadraticFunction, e, y, with_grad=False):
    """Gauge of {x : f(x) >= 0} about ``e``; ``y`` may be a batch (..., n)."""
    e, fe, ce = _center_data(f, e)
    return _radial_root(fe, ce, f.P, 0.0, np.asarray(y, dtype=float) - e, with_grad)


def qcqp_radial_dual(f0: QuadraticFunction, e0, tau, y, with_grad=False):
    """(tau f0)^{Gamma,e0}(y) in closed form; ``tau = inf`` gives the domain gauge."""
    e0, fe, ce = _center_data(f0, e0)
    d = np.asarray(y, dtype=float) - e0
    if np.isinf(tau):
        return _radial_root(fe, ce, f0.P, 0.0, d, with_grad)
    if not tau > 0:
        raise ValueError("tau must be positive")
    return _radial_root(tau * fe, tau * ce, tau * f0.P, 1.0, d, with_grad)


def spectral_norm(P, tol=1e-10, max_iter=100_000):
    """Largest eigenvalue of a symmetric PSD matrix by power iteration.

    Starts from the normalized all-ones vector and stops once the residual
    ||P x - lam x|| falls below ``tol * lam``.
    """
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    x = np.ones(n) / np.sqrt(n)
    if not np.any(P @ x):
        # ones vector in the null space; use a fixed pseudo-random start
        x = np.random.default_rng(0).standard_normal(n)
        x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(max_iter):
        y = P @ x
        lam = float(x @ y)
        if lam <= 0:
            return 0.0
        res = np.linalg.norm(y - lam * x)
        if res <= tol * lam:
            break
        x = y / np.linalg.norm(y)
    return lam


def natural_center(f: QuadraticFunction, tol=1e-10, max_iter=None):
    """Approximate solution of P e + q = 0 by conjugate gradients."""
    n = f.dim
    e, info = cg(f.P, -f.q, rtol=0.0, atol=tol, maxiter=max_iter or 10 * n)
    if f(e) <= 0:
        raise CenterNotStrict(f"natural center has f(e) = {f(e)}")
    return e


def _eig_pd(P):
    w, V = np.linalg.eigh(P)
    if w[0] <= 0:
        raise NotPositiveDefinite(f"smallest eigenvalue {w[0]}")
    return w, V


def boundary_point(f: QuadraticFunction, u):
    """x = e_bar + sqrt(2 f(e_bar)) P^{-1/2} u with e_bar the maximizer; f(x) = 0."""
    w, V = _eig_pd(f.P)
    ebar = -(V @ ((V.T @ f.q) / w))
    fbar = f(ebar)
    if not fbar > 0:
        raise CenterNotStrict(f"maximum value {fbar} is not positive")
    root = V @ ((V.T @ np.asarray(u, dtype=float)) / np.sqrt(w))
    return ebar + np.sqrt(2.0 * fbar) * root


def sample_controlled_center(f: QuadraticFunction, alpha, u, op_norm=None):
    """Center with a known interior radius.

    Moves from the boundary point x (see ``boundary_point``) along the
    inward gradient by alpha/||P||; the ball of radius
    alpha ||grad f(x)|| / ||P|| around the result lies inside {f >= 0}
    and touches the boundary at x.  Returns ``(e, R)``.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    if op_norm is None:
        op_norm = spectral_norm(f.P)
    x = boundary_point(f, u)
    g = f.gradient(x)
    e = x + (alpha / op_norm) * g
    R = alpha * np.linalg.norm(g) / op_norm
    if not f(e) > 0:
        raise CenterNotStrict("sampled center is not strictly interior")
    return e, float(R)


@dataclass
class QcqpInstance:
    objective: QuadraticFunction
    constraints: list
    centers: Optional[list] = None
    seed: Optional[int] = None
    metadata: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.objective.dim

    @property
    def m(self):
        return len(self.constraints)

    @property
    def functions(self):
        return [self.objective, *self.constraints]

    def natural_centers(self, tol=1e-10):
        return [natural_center(f, tol) for f in self.functions]

    def resolved_centers(self):
        if self.centers is not None:
            return [np.asarray(c, dtype=float) for c in self.centers]
        return self.natural_centers()

    def to_dict(self):
        out = {
            "n": self.n,
            "m": self.m,
            "seed": self.seed,
            "objective": self.objective.to_dict(),
            "constraints": [c.to_dict() for c in self.constraints],
        }
        if self.centers is not None:
            out["centers"] = [np.asarray(c, dtype=float).tolist() for c in self.centers]
        if self.metadata:
            out["metadata"] = self.metadata
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), separators=(",", ":"))

    def content_hash(self):
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    @classmethod
    def from_dict(cls, data):
        centers = data.get("centers")
        if centers is not None:
            centers = [np.asarray(c, dtype=float) for c in centers]
        return cls(
            QuadraticFunction.from_dict(data["objective"]),
            [QuadraticFunction.from_dict(c) for c in data["constraints"]],
            centers,
            data.get("seed"),
            data.get("metadata", {}),
        )

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(fh.read())


def generate_instance(n=200, m=10, seed=0):
    """Random convex QCQP with the origin as a Slater point.

    P_j = G_j^T G_j + 0.01 I with standard normal G_j, q_j ~ N(0, sigma_j I)
    (covariance sigma_0 = 10 for the objective and 1 for constraints), and
    r_j ~ U[0.1, 1.1].  Draw order: all G, then all q, then all r.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    rng = np.random.default_rng(seed)
    k = m + 1
    Ps = []
    for _ in range(k):
        G = rng.standard_normal((n, n))
        P = G.T @ G
        P = 0.5 * (P + P.T) + RIDGE * np.eye(n)
        Ps.append(P)
    sigmas = [SIGMA_OBJECTIVE] + [SIGMA_CONSTRAINT] * m
    qs = [np.sqrt(s) * rng.standard_normal(n) for s in sigmas]
    rs = [float(rng.uniform(0.1, 1.1)) for _ in range(k)]
    funcs = [QuadraticFunction(P, q, r) for P, q, r in zip(Ps, qs, rs)]
    meta = {
        "generator": "numpy.random.default_rng",
        "draw_order": "G_0..G_m, q_0..q_m, r_0..r_m",
        "q_covariance": "sigma_j * I (standard deviation sqrt(sigma_j))",
        "sigma_0": SIGMA_OBJECTIVE,
        "sigma_j": SIGMA_CONSTRAINT,
        "ridge": RIDGE,
    }
    return QcqpInstance(funcs[0], funcs[1:], None, seed, meta)


# ----------------------------------------------------------------------------
# Oracle wrappers (closed forms behind the generic oracle interfaces)


class QuadraticConstraint(ConstraintOracle):
    def __init__(self, f: QuadraticFunction, center):
        self.f = f
        self.center, self._fe, _ = _center_data(f, center)

    def contains(self, x):
        return bool(self.f(x) >= 0.0)

    def normal_at(self, xb):
        return -self.f.gradient(xb)

    def boundary_scale(self, x):
        return float(qcqp_gauge(self.f, self.center, x))


class QuadraticObjective(ObjectiveOracle):
    def __init__(self, f: QuadraticFunction, center):
        self.f = f
        self.center, _, _ = _center_data(f, center)

    def value(self, x):
        return float(self.f(x))

    def supgradient(self, x):
        return self.f.gradient(x)

    def radial_dual(self, tau, y):
        return float(qcqp_radial_dual(self.f, self.center, tau, y))

    def domain_oracle(self):
        return QuadraticConstraint(self.f, self.center)


def instance_oracles(inst: QcqpInstance, centers=None):
    centers = inst.resolved_centers() if centers is None else centers
    obj = QuadraticObjective(inst.objective, centers[0])
    cons = [QuadraticConstraint(f, e) for f, e in zip(inst.constraints, centers[1:])]
    return obj, cons


class QcqpDual:
    """Vectorized multiradial dual of a QCQP (same interface as MultiradialDual)."""

    def __init__(self, inst: QcqpInstance, centers=None, kind=IdentifierKind.MAX_GAUGES):
        self.instance = inst
        self.kind = IdentifierKind(kind)
        centers = inst.resolved_centers() if centers is None else centers
        self.centers = np.array([np.asarray(c, dtype=float) for c in centers])
        funcs = inst.functions
        self.P = np.array([f.P for f in funcs])
        self.q = np.array([f.q for f in funcs])
        self.r = np.array([f.r for f in funcs])
        self.dim = inst.n
        self.n_components = inst.m + 1
        PE = np.einsum("kij,kj->ki", self.P, self.centers)
        self.fe = self.r - np.sum(self.q * self.centers, 1) - 0.5 * np.sum(self.centers * PE, 1)
        if np.any(self.fe <= 0):
            bad = np.flatnonzero(self.fe <= 0).tolist()
            raise CenterNotStrict(f"centers not strictly interior for components {bad}")
        self.ce = -self.q - PE

    def with_kind(self, kind):
        return QcqpDual(self.instance, self.centers, kind)

    def components(self, y, tau):
        y = np.asarray(y, dtype=float)
        D = y[None, :] - self.centers
        PD = np.einsum("kij,kj->ki", self.P, D)
        W = np.sum(D * PD, 1)
        g = np.sum(D * self.ce, 1)
        F = self.fe.copy()
        C = self.ce
        offset = np.zeros(self.n_components)
        scale = np.ones(self.n_components)
        if not np.isinf(tau):
            scale[0] = tau
            offset[0] = 1.0
        # component k: root of (s F) v^2 + (s g - offset) v - 1/2 s W = 0
        Fs = scale * F
        a = offset - scale * g
        Ws = scale * W
        s = np.sqrt(np.maximum(a * a + 2.0 * Fs * Ws, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            num = np.where(a >= 0, a + s, 2.0 * Fs * np.maximum(Ws, 0.0) / (s - a))
            num = np.where(s > 0, num, 0.0)
            ratio = np.where(s > 0, num / s, 0.0)
            inv_s = np.where(s > 0, 1.0 / s, 0.0)
        vals = num / (2.0 * Fs)
        grads = (-(ratio * scale)[:, None] * C
                 + (2.0 * Fs * scale * inv_s)[:, None] * PD) / (2.0 * Fs)[:, None]
        lo = 0 if np.isinf(tau) else 1
        vals[lo:], grads[lo:] = transform_gauges(self.kind, vals[lo:], grads[lo:])
        return vals, grads

    def constraint_values(self, x):
        x = np.asarray(x, dtype=float)
        Px = np.einsum("kij,j->ki", self.P[1:], x)
        return self.r[1:] - self.q[1:] @ x - 0.5 * Px @ x

    def objective(self, x):
        return float(self.instance.objective(x))

    def feasible(self, x):
        return bool(np.all(self.constraint_values(x) >= 0.0))

    def in_domain(self, x):
        return self.objective(x) > 0.0
