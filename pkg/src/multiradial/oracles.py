"""Gauges, radial transforms, convex identifiers and the multiradial dual.

Constraint sets are only touched through membership tests, a boundary
linesearch from a reference point, and normal vectors.  Objectives are
touched through values and supgradients.  From those, everything needed to
minimize

    Phi_tau(y) = max{ (tau f)^{Gamma,e0}(y), phi(y) }

is assembled here.  Components are indexed 0 (objective) .. m (constraints).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .exceptions import DegenerateNormal, NonInteriorCenter, ZeroDenominator

__all__ = [
    "LinesearchConfig",
    "ConstraintOracle",
    "SetOracle",
    "ObjectiveOracle",
    "FunctionObjective",
    "GaugeEval",
    "DualEval",
    "IdentifierKind",
    "ConvexIdentifier",
    "MultiradialDual",
    "gauge_value",
    "gauge_subgradient",
    "radial_transform",
    "radial_dual_value",
    "radial_dual_subgradient",
    "identifier_eval",
    "phi_eval",
    "primal_eval",
    "transform_gauges",
    "argmax_first",
]


@dataclass(frozen=True)
class LinesearchConfig:
    rel_tol: float = 1e-12
    max_iter: int = 200
    max_bracket: int = 200
    tie_tol: float = 1e-12


DEFAULT_LINESEARCH = LinesearchConfig()


def argmax_first(values, tol=DEFAULT_LINESEARCH.tie_tol):
    """Index of the maximum, ties within ``tol`` going to the lowest index."""
    values = np.asarray(values)
    top = values.max()
    return int(np.flatnonzero(values >= top - tol)[0])


def _bisect(pred, lo, hi, cfg):
    # pred(lo) is False, pred(hi) is True; shrink to the switch point.
    for _ in range(cfg.max_iter):
        if hi - lo <= cfg.rel_tol * hi:
            break
        mid = 0.5 * (lo + hi)
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return lo, hi


# ----------------------------------------------------------------------------
# Constraint oracles and gauges


class ConstraintOracle:
    """A closed convex set seen through membership, linesearch and normals.

    Subclasses must provide ``center``, ``contains`` and ``normal_at``; the
    default ``boundary_scale`` is a bracketing bisection on ``contains``.
    """

    center: np.ndarray
    config: LinesearchConfig = DEFAULT_LINESEARCH

    def contains(self, x) -> bool:
        raise NotImplementedError

    def normal_at(self, xb) -> np.ndarray:
        raise NotImplementedError

    def boundary_scale(self, x) -> float:
        """Gauge value of ``x`` found by a ray search from the center."""
        e = self.center
        d = np.asarray(x, dtype=float) - e
        if not np.any(d):
            return 0.0
        if not self.contains(e):
            raise NonInteriorCenter("center is not a member of the set")
        cfg = self.config

        def inside(v):
            return self.contains(e + d / v)

        if inside(1.0):
            hi, lo = 1.0, 0.5
            for _ in range(cfg.max_bracket):
                if not inside(lo):
                    break
                hi, lo = lo, 0.5 * lo
            else:
                # set is unbounded along this ray
                return 0.0
        else:
            lo, hi = 1.0, 2.0
            for _ in range(cfg.max_bracket):
                if inside(hi):
                    break
                lo, hi = hi, 2.0 * hi
            else:
                raise NonInteriorCenter(
                    "no boundary crossing found; center is on or outside the boundary")
        lo, hi = _bisect(inside, lo, hi, cfg)
        return 0.5 * (lo + hi)


class SetOracle(ConstraintOracle):
    """Constraint oracle built from plain callables."""

    def __init__(self, membership: Callable, center, normal: Callable,
                 config: LinesearchConfig = DEFAULT_LINESEARCH):
        self._membership = membership
        self._normal = normal
        self.center = np.asarray(center, dtype=float)
        self.config = config

    def contains(self, x):
        return bool(self._membership(np.asarray(x, dtype=float)))

    def normal_at(self, xb):
        return np.asarray(self._normal(np.asarray(xb, dtype=float)), dtype=float)


@dataclass(frozen=True)
class GaugeEval:
    value: float
    subgradient: np.ndarray
    active: int = 0


@dataclass(frozen=True)
class DualEval:
    value: float
    subgradient: np.ndarray
    active: int = 0  # 0 is the objective, j >= 1 is constraint j


def gauge_value(oracle: ConstraintOracle, x) -> float:
    x = np.asarray(x, dtype=float)
    if np.array_equal(x, oracle.center):
        return 0.0
    return float(oracle.boundary_scale(x))


def gauge_subgradient(oracle: ConstraintOracle, x, active=0) -> GaugeEval:
    """Gauge value and a subgradient built from a boundary normal.

    The normal xi at the boundary point x_b on the ray through ``x`` is
    rescaled to xi / <xi, x_b - e>; homogeneity then makes it a subgradient
    everywhere along the ray.
    """
    x = np.asarray(x, dtype=float)
    e = oracle.center
    v = gauge_value(oracle, x)
    if v == 0.0:
        return GaugeEval(0.0, np.zeros_like(x), active)
    xb = e + (x - e) / v
    xi = oracle.normal_at(xb)
    denom = float(xi @ (xb - e))
    if not denom > 0.0:
        raise DegenerateNormal(f"<normal, x_b - e> = {denom} at x_b={xb}")
    return GaugeEval(v, xi / denom, active)


# ----------------------------------------------------------------------------
# Objectives and the radial transform


class ObjectiveOracle:
    """Concave objective with a reference point e0 in the interior of its domain.

    ``value`` may return nonpositive numbers (or -inf) outside the domain;
    the radial machinery clips them at zero, which is the extended-positive
    reading of the objective.
    """

    center: np.ndarray
    config: LinesearchConfig = DEFAULT_LINESEARCH

    def value(self, x) -> float:
        raise NotImplementedError

    def supgradient(self, x) -> np.ndarray:
        raise NotImplementedError

    @property
    def value_at_center(self) -> float:
        return float(self.value(self.center))

    def radial_dual(self, tau, y) -> float:
        """(tau f)^{Gamma,e0}(y); closed-form subclasses override this."""
        e = self.center
        w = e + tau * (np.asarray(y, dtype=float) - e)
        return radial_transform(self.value, e, w, self.config) / tau

    def domain_oracle(self) -> ConstraintOracle:
        """The closed domain {f >= 0} as a constraint oracle about e0."""
        return SetOracle(lambda x: self.value(x) >= 0.0, self.center,
                         lambda x: -self.supgradient(x), self.config)


class FunctionObjective(ObjectiveOracle):
    def __init__(self, value: Callable, supgradient: Callable, center,
                 config: LinesearchConfig = DEFAULT_LINESEARCH):
        self._value = value
        self._supgradient = supgradient
        self.center = np.asarray(center, dtype=float)
        self.config = config

    def value(self, x):
        return float(self._value(np.asarray(x, dtype=float)))

    def supgradient(self, x):
        return np.asarray(self._supgradient(np.asarray(x, dtype=float)), dtype=float)


def radial_transform(value: Callable, center, y, config=DEFAULT_LINESEARCH) -> float:
    """f^{Gamma,e}(y) = sup{v > 0 : v f(e + (y - e)/v) <= 1} by bisection.

    The perspective v -> v f(e + (y-e)/v) is nondecreasing for concave f
    with f(e) > 0, so the feasible v form an interval (0, v*].  An empty set
    maps to 0.
    """
    e = np.asarray(center, dtype=float)
    d = np.asarray(y, dtype=float) - e

    def persp(v):
        fv = value(e + d / v)
        return v * max(fv, 0.0)

    if not np.any(d):
        fe = value(e)
        return 1.0 / fe if fe > 0 else np.inf

    def too_big(v):
        return persp(v) > 1.0

    cfg = config
    if not too_big(1.0):
        lo, hi = 1.0, 2.0
        for _ in range(cfg.max_bracket):
            if too_big(hi):
                break
            lo, hi = hi, 2.0 * hi
        else:
            return np.inf
    else:
        hi, lo = 1.0, 0.5
        for _ in range(cfg.max_bracket):
            if not too_big(lo):
                break
            hi, lo = lo, 0.5 * lo
        else:
            return 0.0
    lo, hi = _bisect(too_big, lo, hi, cfg)
    return 0.5 * (lo + hi)


def radial_dual_value(obj: ObjectiveOracle, tau: float, y) -> float:
    if not tau > 0:
        raise ValueError("tau must be positive")
    return float(obj.radial_dual(tau, np.asarray(y, dtype=float)))


def radial_dual_subgradient(obj: ObjectiveOracle, tau: float, y,
                            fallback: bool = True) -> DualEval:
    """Subgradient of (tau f)^{Gamma,e0} from a supgradient of f.

    With v the transform value and (x, u) = (e0 + (y-e0)/v, 1/v) the
    matching hypograph point, the hypograph normal (-tau grad f(x), 1) is
    divided by its inner product with (x - e0, u).  When that inner product
    is not positive (or v = 0) the domain-gauge subgradient is returned
    instead, unless ``fallback`` is False.
    """
    y = np.asarray(y, dtype=float)
    e = obj.center
    v = radial_dual_value(obj, tau, y)
    if v > 0.0 and np.isfinite(v):
        x = e + (y - e) / v
        zeta = -tau * obj.supgradient(x)
        denom = float(zeta @ (x - e)) + 1.0 / v
        if denom > 0.0:
            return DualEval(v, zeta / denom, 0)
    if not fallback:
        raise ZeroDenominator(f"radial subgradient undefined at y={y}")
    g = gauge_subgradient(obj.domain_oracle(), y)
    return DualEval(v, g.subgradient, 0)


# ----------------------------------------------------------------------------
# Convex identifiers


class IdentifierKind(str, enum.Enum):
    MAX_GAUGES = "max"
    HUBER = "huber"
    MAX_SQUARED = "squared"


def transform_gauges(kind, gamma, grad):
    """Apply an identifier's per-component map to gauge values and gradients.

    ``gamma`` has shape (k,) and ``grad`` shape (k, n); both are returned
    transformed, new arrays.
    """
    kind = IdentifierKind(kind)
    gamma = np.asarray(gamma, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if kind is IdentifierKind.MAX_GAUGES:
        return gamma.copy(), grad.copy()
    if kind is IdentifierKind.MAX_SQUARED:
        return gamma**2, 2.0 * gamma[..., None] * grad
    outer = gamma > 1.0
    val = np.where(outer, gamma, 0.5 * gamma**2 + 0.5)
    scale = np.where(outer, 1.0, gamma)
    return val, scale[..., None] * grad


@dataclass(frozen=True)
class ConvexIdentifier:
    kind: IdentifierKind
    components: Sequence[ConstraintOracle] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "kind", IdentifierKind(self.kind))
        object.__setattr__(self, "components", tuple(self.components))

    def component_values(self, y):
        y = np.asarray(y, dtype=float)
        evals = [gauge_subgradient(c, y, j + 1) for j, c in enumerate(self.components)]
        gam = np.array([g.value for g in evals])
        grads = np.array([g.subgradient for g in evals]).reshape(len(evals), y.size)
        return transform_gauges(self.kind, gam, grads)


def identifier_eval(ident: ConvexIdentifier, y) -> DualEval:
    if not ident.components:
        raise ValueError("identifier needs at least one component")
    vals, grads = ident.component_values(y)
    j = argmax_first(vals)
    return DualEval(float(vals[j]), grads[j], j + 1)


def phi_eval(obj: ObjectiveOracle, ident: ConvexIdentifier, tau: float, y) -> DualEval:
    """Multiradial dual Phi_tau(y); ties go to the objective, then low j."""
    d0 = radial_dual_subgradient(obj, tau, y)
    di = identifier_eval(ident, y)
    if d0.value >= di.value - DEFAULT_LINESEARCH.tie_tol:
        return d0
    return di


def primal_eval(obj: ObjectiveOracle, constraints: Sequence[ConstraintOracle],
                tau: float, x) -> float:
    """tau f(x) on the feasible region, 0 elsewhere (min with the 0/+inf indicator)."""
    x = np.asarray(x, dtype=float)
    if all(c.contains(x) for c in constraints):
        return tau * max(obj.value(x), 0.0)
    return 0.0


# ----------------------------------------------------------------------------
# Problem object consumed by the first-order methods


class MultiradialDual:
    """Generic (oracle-driven) multiradial dual for the solvers.

    ``components(y, tau)`` returns the m+1 component values and gradients of
    Phi_tau: index 0 is (tau f)^{Gamma,e0}, indices 1..m the identifier
    components.  ``tau = inf`` gives the phase-one function, where the
    objective slot becomes the (transformed) gauge of dom f.
    """

    def __init__(self, objective: ObjectiveOracle, constraints: Sequence[ConstraintOracle],
                 kind=IdentifierKind.MAX_GAUGES):
        self.objective_oracle = objective
        self.constraints = tuple(constraints)
        self.kind = IdentifierKind(kind)
        self.identifier = ConvexIdentifier(self.kind, self.constraints)
        self.dim = objective.center.size
        self.n_components = len(self.constraints) + 1
        self.centers = np.array([objective.center] + [c.center for c in self.constraints])
        self._domain = objective.domain_oracle()

    def with_kind(self, kind):
        return MultiradialDual(self.objective_oracle, self.constraints, kind)

    def components(self, y, tau):
        y = np.asarray(y, dtype=float)
        ivals, igrads = self.identifier.component_values(y)
        if np.isinf(tau):
            g = gauge_subgradient(self._domain, y)
            v0, g0 = transform_gauges(self.kind, [g.value], g.subgradient[None, :])
            v0, g0 = v0[0], g0[0]
        else:
            d = radial_dual_subgradient(self.objective_oracle, tau, y)
            v0, g0 = d.value, d.subgradient
        vals = np.concatenate([[v0], ivals])
        grads = np.vstack([g0[None, :], igrads])
        return vals, grads

    def objective(self, x) -> float:
        return self.objective_oracle.value(x)

    def feasible(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return all(c.contains(x) for c in self.constraints)

    def in_domain(self, x) -> bool:
        return self.objective_oracle.value(x) > 0.0
