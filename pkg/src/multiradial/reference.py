"""Slow, independent oracles for validating the fast code paths.

The bisection routines only use membership tests or function values and
never touch the closed-form roots they validate.  The grid oracles
brute-force tiny (n <= 2) instances; the d(tau) grid evaluates Phi through
the closed forms, which the bisection routines check separately.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import BracketFailure, EmptyFeasibleGrid, SlaterViolation
from .qcqp import QcqpInstance, QuadraticFunction, qcqp_gauge, qcqp_radial_dual

MAX_DOUBLINGS = 1100  # enough to pass 2**1023


def _bisect_boundary(inside: Callable[[float], bool], lo: float, hi: float, max_iter=2000):
    """Shrink [lo, hi] (inside(lo), not inside(hi)) until the floats meet."""
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if inside(mid):
            lo = mid
        else:
            hi = mid
    return lo, hi


def bisection_gauge(membership: Callable, center, x, tol=0.0) -> float:
    """Gauge of a convex set about ``center`` using only a membership test.

    Finds the largest step s with center + s (x - center) inside, then
    returns 1/s.  ``tol`` is a relative width at which to stop; the default
    runs until the bracket endpoints are adjacent floats.
    """
    center = np.asarray(center, dtype=float)
    x = np.asarray(x, dtype=float)
    if not membership(center):
        raise BracketFailure("center is not in the set")
    d = x - center
    if not np.any(d):
        return 0.0

    def inside(s):
        with np.errstate(over="ignore", invalid="ignore"):
            return bool(membership(center + s * d))

    lo, hi = 0.0, 1.0
    for _ in range(MAX_DOUBLINGS):
        if not inside(hi):
            break
        lo, hi = hi, 2.0 * hi
    else:
        return 0.0  # unbounded along this ray
    if lo == 0.0:
        lo = hi
        for _ in range(MAX_DOUBLINGS):
            lo *= 0.5
            if inside(lo):
                break
            hi = lo
        else:
            raise BracketFailure("no interior point found along the ray")
    if tol > 0:
        while hi - lo > tol * lo:
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if inside(mid) else (lo, mid)
    else:
        lo, hi = _bisect_boundary(inside, lo, hi)
    return 1.0 / (0.5 * (lo + hi))


def bisection_radial(value: Callable, center, y, tau=1.0, tol=0.0) -> float:
    """(tau f)^{Gamma,center}(y) = sup{v > 0 : v tau f(center + (y-center)/v) <= 1}.

    v -> v f(center + d/v) is a concave perspective that grows without bound
    when f(center) > 0, so {v : ... <= 1} is an interval (0, v*] and v* is
    found by bracketing and bisection on function values alone.
    """
    center = np.asarray(center, dtype=float)
    d = np.asarray(y, dtype=float) - center
    if not value(center) > 0:
        raise BracketFailure("f(center) must be positive")

    def inside(v):
        return v * tau * max(float(value(center + d / v)), 0.0) <= 1.0

    lo = hi = 1.0
    if inside(1.0):
        for _ in range(MAX_DOUBLINGS):
            hi *= 2.0
            if not inside(hi):
                break
            lo = hi
        else:
            raise BracketFailure("radial transform is unbounded")
    else:
        for _ in range(MAX_DOUBLINGS):
            lo *= 0.5
            if inside(lo):
                break
            hi = lo
        else:
            return 0.0
    if tol > 0:
        while hi - lo > tol * lo:
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if inside(mid) else (lo, mid)
    else:
        lo, hi = _bisect_boundary(inside, lo, hi)
    return 0.5 * (lo + hi)


def quadratic_membership(f: QuadraticFunction):
    return lambda x: float(f(x)) >= 0.0


# ----------------------------------------------------------------------------
# Grid oracles


def grid_axis(box=(-3.0, 3.0), step=1e-4):
    lo, hi = box
    count = int(round((hi - lo) / step)) + 1
    return lo + step * np.arange(count)


def _grid_chunks(n, axis, chunk=200_000):
    if n == 1:
        for i in range(0, axis.size, chunk):
            yield axis[i:i + chunk, None]
    elif n == 2:
        rows = max(1, chunk // axis.size)
        for i in range(0, axis.size, rows):
            a, b = np.meshgrid(axis[i:i + rows], axis, indexing="ij")
            yield np.column_stack([a.ravel(), b.ravel()])
    else:
        raise ValueError("grid oracles handle n <= 2 only")


def default_step(n):
    return 1e-4 if n == 1 else 1e-3


def grid_p_star(inst: QcqpInstance, box=(-3.0, 3.0), step=None) -> Tuple[float, np.ndarray]:
    """Best feasible objective value over a regular grid (first hit on ties)."""
    step = default_step(inst.n) if step is None else step
    axis = grid_axis(box, step)
    best, arg = -math.inf, None
    for Y in _grid_chunks(inst.n, axis):
        ok = np.ones(len(Y), dtype=bool)
        for g in inst.constraints:
            ok &= g(Y) >= 0.0
        if not ok.any():
            continue
        vals = np.where(ok, inst.objective(Y), -np.inf)
        i = int(np.argmax(vals))
        if vals[i] > best:
            best, arg = float(vals[i]), Y[i].copy()
    if arg is None:
        raise EmptyFeasibleGrid("no grid point satisfies the constraints")
    return best, arg


def phi_on_points(inst: QcqpInstance, centers, tau, Y):
    """Phi_tau with the max-of-gauges identifier at each row of Y."""
    vals = qcqp_radial_dual(inst.objective, centers[0], tau, Y)
    for g, e in zip(inst.constraints, centers[1:]):
        vals = np.maximum(vals, qcqp_gauge(g, e, Y))
    return vals


def grid_d_tau(inst: QcqpInstance, tau, box=(-3.0, 3.0), step=None, centers=None,
               return_argmin=False):
    """Grid minimum of Phi_tau (closed-form evaluation)."""
    step = default_step(inst.n) if step is None else step
    centers = inst.resolved_centers() if centers is None else centers
    axis = grid_axis(box, step)
    best, arg = math.inf, None
    for Y in _grid_chunks(inst.n, axis):
        vals = phi_on_points(inst, centers, tau, Y)
        i = int(np.argmin(vals))
        if vals[i] < best:
            best, arg = float(vals[i]), Y[i].copy()
    return (best, arg) if return_argmin else best


def grid_simplex_qp(values, grads, alpha, step=1e-4):
    """Best simplex weights on the grid of spacing ``step``, for at most 3 weights.

    Objective: sum_j lam_j h_j - (alpha/2) ||sum_j lam_j g_j||^2.  With three
    weights (a, b, 1 - a - b) every row of fixed a is a concave quadratic in
    b, so the row's grid maximum sits at an end of the row or at one of the
    two grid points around the row's stationary point; only those are
    evaluated.  Returns (objective, lam).
    """
    h = np.asarray(values, dtype=float)
    G = np.atleast_2d(np.asarray(grads, dtype=float))
    k = h.size
    if k == 1:
        return float(h[0] - 0.5 * alpha * G[0] @ G[0]), np.ones(1)
    if k > 3:
        raise ValueError("grid_simplex_qp handles at most 3 weights")
    count = int(round(1.0 / step))
    a = np.arange(count + 1) * step

    def objective(lam):
        s = lam @ G
        return lam @ h - 0.5 * alpha * np.sum(s * s, axis=-1)

    if k == 2:
        lam = np.stack([a, 1.0 - a], axis=1)
        vals = objective(lam)
        i = int(np.argmax(vals))
        return float(vals[i]), lam[i]
    u = G[2] + np.multiply.outer(a, G[0] - G[2])
    w = G[1] - G[2]
    ww = float(w @ w)
    kmax = count - np.arange(count + 1)
    if ww > 0:
        bstar = ((h[1] - h[2]) - alpha * (u @ w)) / (alpha * ww)
        kf = np.floor(bstar / step)
    else:
        kf = np.zeros(count + 1)
    cands = np.stack([np.zeros(count + 1), kmax, kf, kf + 1], axis=1)
    cands = np.clip(cands, 0, kmax[:, None])
    A = np.repeat(a[:, None], 4, axis=1)
    B = cands * step
    lam = np.stack([A, B, 1.0 - A - B], axis=-1).reshape(-1, 3)
    vals = objective(lam)
    i = int(np.argmax(vals))
    return float(vals[i]), lam[i]


# ----------------------------------------------------------------------------
# Analysis constants


@dataclass
class TheoryConstants:
    R0: float
    D0: float
    eta: float
    rho: float
    p_star: float
    x_star: List[float]
    x_SL: List[float]
    gauge_x_star: float
    phi_x_SL: float

    def c_tau(self, tau):
        return self.rho * self.eta / (tau * self.p_star)

    def to_dict(self):
        return asdict(self)


def ellipsoid_geometry(f: QuadraticFunction, e0, n_angles=200_000):
    """(R0, D0) for {f >= 0} with P positive definite and n <= 2.

    D0 is the major-axis length.  R0 is exact when e0 is the ellipsoid center
    (1-d: always exact); otherwise the boundary is sampled by angle.
    """
    w, V = np.linalg.eigh(f.P)
    if w[0] <= 0:
        raise ValueError("objective must be strictly concave")
    ebar = -np.linalg.solve(f.P, f.q)
    scale = 2.0 * float(f(ebar))
    D0 = 2.0 * math.sqrt(scale / w[0])
    e0 = np.asarray(e0, dtype=float)
    if f.dim == 1:
        half = math.sqrt(scale / w[0])
        lo, hi = ebar[0] - half, ebar[0] + half
        return min(e0[0] - lo, hi - e0[0]), D0
    if np.allclose(e0, ebar, rtol=0, atol=1e-12):
        return math.sqrt(scale / w[-1]), D0
    if f.dim != 2:
        raise ValueError("sampled R0 needs n <= 2")
    th = np.linspace(0.0, 2.0 * np.pi, n_angles, endpoint=False)
    U = np.column_stack([np.cos(th), np.sin(th)])
    pts = ebar + math.sqrt(scale) * (U @ (V / np.sqrt(w)).T)
    return float(np.min(np.linalg.norm(pts - e0, axis=1))), D0


def compute_theory_constants(inst: QcqpInstance, e0=None, x_SL=None, centers=None,
                             box=(-3.0, 3.0), step=None) -> TheoryConstants:
    """Analysis-only constants for the canonical (max of gauges) identifier."""
    centers = list(inst.resolved_centers() if centers is None else centers)
    if e0 is not None:
        centers[0] = np.asarray(e0, dtype=float)
    e0 = np.asarray(centers[0], dtype=float)
    p_star, x_star = grid_p_star(inst, box, step)
    R0, D0 = ellipsoid_geometry(inst.objective, e0)
    x_SL = np.asarray(centers[1] if x_SL is None and len(centers) > 1 else x_SL, dtype=float)
    g_star = bisection_gauge(quadratic_membership(inst.objective), e0, x_star)
    phi_sl = max((bisection_gauge(quadratic_membership(g), e, x_SL)
                  for g, e in zip(inst.constraints, centers[1:])), default=0.0)
    eta = (1.0 - g_star) * (1.0 - phi_sl)
    if not eta > 0:
        raise SlaterViolation(f"eta = {eta} is not positive")
    return TheoryConstants(float(R0), float(D0), float(eta), float(R0 / (D0 + R0)), p_star,
                           x_star.tolist(),
                           x_SL.tolist(), g_star, phi_sl)


def grid_slack(inst: QcqpInstance, centers, step):
    """2 * step * Lipschitz bound of Phi (1 / min interior radius)."""
    radii = []
    for f, e in zip(inst.functions, centers):
        if np.all(np.linalg.eigvalsh(f.P) > 0):
            radii.append(ellipsoid_geometry(f, e)[0])
        elif not np.any(f.P):
            # half-space r - q.x >= 0: distance from e to the hyperplane
            radii.append(float(f(e)) / float(np.linalg.norm(f.q)))
        else:
            raise ValueError("slack needs ellipsoidal or affine components")
    return 2.0 * step / min(radii)


@dataclass
class SandwichRow:
    tau: float
    p_tau: float
    d_tau: float
    lower: float
    middle: float
    upper: float
    ok: bool


@dataclass
class SandwichReport:
    rows: List[SandwichRow]
    slack: float

    @property
    def violations(self):
        return [r for r in self.rows if not r.ok]

    @property
    def ok(self):
        return not self.violations


def sandwich_check(constants: TheoryConstants, tau_samples: Sequence[float],
                   d_of_tau: Union[Callable[[float], float], Mapping[float, float]],
                   slack: float) -> SandwichReport:
    """c_tau (p(tau)-1) <= 1-d(tau) <= (p(tau)-1)/rho, up to ``slack``, for tau >= 1/p*."""
    get = d_of_tau if callable(d_of_tau) else d_of_tau.__getitem__
    rows = []
    for tau in tau_samples:
        p_tau = tau * constants.p_star
        d = float(get(tau))
        lower = constants.c_tau(tau) * (p_tau - 1.0)
        middle = 1.0 - d
        upper = (p_tau - 1.0) / constants.rho
        ok = lower <= middle + slack and middle <= upper + slack
        rows.append(SandwichRow(float(tau), p_tau, d, lower, middle, upper, ok))
    return SandwichReport(rows, slack)


def finite_diff_check(fn: Callable, grad_fn: Callable, points, h=1e-5, floor=1e-6) -> float:
    """Worst ||central difference - gradient|| / max(||gradient||, floor)."""
    worst = 0.0
    for x in points:
        x = np.asarray(x, dtype=float)
        g = np.asarray(grad_fn(x), dtype=float)
        fd = np.empty_like(x)
        for i in range(x.size):
            step = np.zeros_like(x)
            step[i] = h
            fd[i] = (fn(x + step) - fn(x - step)) / (2.0 * h)
        worst = max(worst, float(np.linalg.norm(fd - g) / max(np.linalg.norm(g), floor)))
    return worst


# ----------------------------------------------------------------------------
# Cache


@dataclass
class ReferenceResult:
    instance_hash: str
    p_star: float
    x_star: Optional[List[float]] = None
    d_tau: List[Tuple[float, float]] = field(default_factory=list)
    constants: Dict = field(default_factory=dict)

    def to_dict(self):
        return {"instance_hash": self.instance_hash, "p_star": self.p_star,
                "x_star": self.x_star, "d_tau": [list(p) for p in self.d_tau],
                "constants": self.constants}

    @classmethod
    def from_dict(cls, data):
        return cls(data["instance_hash"], float(data["p_star"]), data.get("x_star"),
                   [tuple(p) for p in data.get("d_tau", [])], data.get("constants", {}))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def grid_reference(inst: QcqpInstance, taus=(), box=(-3.0, 3.0), step=None, centers=None,
                   x_SL=None) -> ReferenceResult:
    """Grid p*, d(tau) at each tau, and the analysis constants when available."""
    centers = inst.resolved_centers() if centers is None else centers
    p_star, x_star = grid_p_star(inst, box, step)
    d_tau = [(float(t), grid_d_tau(inst, t, box, step, centers)) for t in taus]
    try:
        consts = compute_theory_constants(inst, x_SL=x_SL, centers=centers, box=box,
                                          step=step).to_dict()
    except (ValueError, SlaterViolation):
        consts = {}
    return ReferenceResult(inst.content_hash(), p_star, x_star.tolist(), d_tau, consts)
