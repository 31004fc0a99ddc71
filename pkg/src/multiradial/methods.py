"""Outer loops: known-optimal-value solve, restarted and parallel multiradial
methods, and phase one.

All routines take a dual object (``QcqpDual`` or ``MultiradialDual``) and a
solver from :mod:`multiradial.solvers`.  The dual is re-tagged with the
solver's identifier kind, so callers need not match them by hand.
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from .exceptions import BudgetExhausted, InfeasibleStart
from .oracles import IdentifierKind
from .solvers import DEFAULT_ACCEL, AccelConfig, FirstOrderMethod, FomProblem, make_solver

TRACE_HEADER = ("iter", "wall_ms", "f_best", "tau_best", "gap_rel", "restarts_total")


def _as_solver(solver, accel=DEFAULT_ACCEL) -> FirstOrderMethod:
    return make_solver(solver, accel) if isinstance(solver, str) else solver


def _tagged(dual, solver):
    return dual if dual.kind == solver.identifier else dual.with_kind(solver.identifier)


# ----------------------------------------------------------------------------
# Known optimal value


@dataclass
class KnownOptTrace:
    ys: List[np.ndarray]
    zs: List[np.ndarray]
    values: List[float]
    converged: bool

    @property
    def z(self):
        return self.zs[-1]


def known_opt_solve(dual, p_star, x0, eps, solver="genGrad", max_steps=10_000,
                    accel=DEFAULT_ACCEL, strict=True) -> KnownOptTrace:
    """Minimize Phi_{1/p*} and map each iterate back by the radial scaling.

    z_i = e0 + (y_i - e0) / Phi(y_i); stops once Phi(y_i) <= 1 + eps.
    """
    if p_star <= 0:
        raise ValueError("p_star must be positive")
    solver = _as_solver(solver, accel)
    problem = FomProblem(_tagged(dual, solver), 1.0 / p_star)
    e0 = dual.centers[0]
    state = solver.initialize(x0, eps, problem)
    ys, zs, values = [], [], []
    for i in range(max_steps + 1):
        y = state.y
        phi = problem.value(y)
        ys.append(y)
        values.append(phi)
        zs.append(e0 + (y - e0) / phi if phi > 0 else y.copy())
        if phi <= 1.0 + eps:
            return KnownOptTrace(ys, zs, values, True)
        if i < max_steps:
            state = solver.step(state, problem)
    out = KnownOptTrace(ys, zs, values, False)
    if strict:
        raise BudgetExhausted(f"Phi still {values[-1]:.6g} after {max_steps} steps", out)
    return out


# ----------------------------------------------------------------------------
# Phase one


def strictly_feasible(dual, y):
    """All gauges below one, confirmed by exact membership."""
    vals, _ = dual.with_kind(IdentifierKind.MAX_GAUGES).components(y, math.inf)
    return bool(np.max(vals) < 1.0 and dual.feasible(y) and dual.in_domain(y))


def phase_one(dual, solver="subgrad", x_start=None, max_steps=20_000, eps0=0.1,
              stage_steps=200, accel=DEFAULT_ACCEL):
    """Find a strictly feasible point in dom f by minimizing Phi_inf.

    Starts from ``x_start`` (default: mean of the centers).  The solver
    accuracy starts at ``eps0`` and is halved, restarting from the best
    point so far, after every stage without progress.
    """
    solver = _as_solver(solver, accel)
    problem = FomProblem(_tagged(dual, solver), math.inf)
    y = np.mean(dual.centers, 0) if x_start is None else np.array(x_start, dtype=float)
    if strictly_feasible(dual, y):
        return y
    best_y, best_v = y, problem.value(y)
    eps = eps0
    state = solver.initialize(y, eps, problem)
    stage_best = best_v
    for i in range(1, max_steps + 1):
        state = solver.step(state, problem)
        y = state.y
        if strictly_feasible(dual, y):
            return y
        v = problem.value(y)
        if v < best_v:
            best_y, best_v = y, v
        if i % stage_steps == 0:
            if best_v >= stage_best:
                eps *= 0.5
            stage_best = best_v
            state = solver.initialize(best_y, eps, problem, previous=state)
    raise InfeasibleStart(f"no strictly feasible point after {max_steps} steps", best_y)


# ----------------------------------------------------------------------------
# Restarted method with a single instance


@dataclass
class MrmTrace:
    y_best: np.ndarray
    f_best: float
    taus: List[float]
    restart_steps: List[int]
    f_history: List[float]
    steps: int


def mrm_run(dual, x0, deltas: Union[float, Sequence[float], Callable[[int, float], float]],
            solver="genGrad", max_steps=10_000, accel=DEFAULT_ACCEL) -> MrmTrace:
    """Single-instance restart scheme.

    ``deltas`` gives delta_k per restart k: a constant, a sequence (last
    entry repeats) or a callable ``(k, tau_k) -> delta_k``.  The solver runs
    on Phi_{tau_k} until an iterate y is feasible with
    1/f(y) <= tau_k/(1+delta_k); then tau_{k+1} = 1/f(y) and the solver
    restarts at y.
    """
    if callable(deltas):
        delta_of = deltas
    elif np.isscalar(deltas):
        delta_of = lambda k, tau: float(deltas)  # noqa: E731
    else:
        seq = list(deltas)
        delta_of = lambda k, tau: seq[min(k, len(seq) - 1)]  # noqa: E731
    solver = _as_solver(solver, accel)
    tagged = _tagged(dual, solver)
    x0 = np.array(x0, dtype=float)
    f0 = dual.objective(x0)
    if not (f0 > 0 and dual.feasible(x0)):
        raise InfeasibleStart("x0 must be feasible with f(x0) > 0")
    k = 0
    tau = 1.0 / f0
    problem = FomProblem(tagged, tau)
    delta = delta_of(0, tau)
    state = solver.initialize(x0, delta, problem)
    y_best, f_best = x0, f0
    taus, restarts, hist = [tau], [], [f0]
    for step in range(1, max_steps + 1):
        state = solver.step(state, problem)
        y = state.y
        if dual.feasible(y):
            fy = dual.objective(y)
            if fy > f_best:
                y_best, f_best = y, fy
            if fy > 0 and 1.0 / fy <= tau / (1.0 + delta):
                k += 1
                tau = 1.0 / fy
                delta = delta_of(k, tau)
                problem = FomProblem(tagged, tau)
                state = solver.initialize(y, delta, problem, previous=state)
                taus.append(tau)
                restarts.append(step)
        hist.append(f_best)
    return MrmTrace(y_best, f_best, taus, restarts, hist, max_steps)


# ----------------------------------------------------------------------------
# Parallel restarted method


@dataclass
class MrmConfig:
    b: float = 4.0
    N: int = 16
    solver: str = "genGrad"
    max_outer: Optional[int] = 1000
    max_inner: Optional[int] = None
    time_budget: Optional[float] = None
    target_gap: Optional[float] = None
    p_star: Optional[float] = None
    stall_outer: Optional[int] = None
    threads: int = 1
    strict: bool = False
    accel: AccelConfig = field(default_factory=AccelConfig)

    def __post_init__(self):
        if self.b < 2:
            raise ValueError("b must be at least 2")
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if self.target_gap is not None and self.p_star is None:
            raise ValueError("target_gap needs p_star")

    def to_dict(self):
        return asdict(self)


@dataclass
class InstanceState:
    level: int
    delta: float
    tau: float
    fom: object
    problem: FomProblem
    restart_count: int = 0
    steps_since_restart: int = 0


@dataclass
class BestTracker:
    y_best: np.ndarray
    f_best: float
    history: List[float] = field(default_factory=list)

    @property
    def tau_best(self):
        return 1.0 / self.f_best

    def offer(self, dual, y):
        """Admit y if it is feasible and strictly improves f; returns True if taken."""
        if not dual.feasible(y):
            return False
        fy = dual.objective(y)
        if fy > self.f_best:
            self.y_best, self.f_best = np.array(y, dtype=float), fy
            return True
        return False


@dataclass(frozen=True)
class RestartEvent:
    iteration: int
    level: int
    old_tau: float
    new_tau: float


@dataclass(frozen=True)
class TraceRecord:
    iter: int
    wall_ms: float
    f_best: float
    tau_best: float
    gap_rel: Optional[float]
    restarts_total: int


@dataclass
class ParallelTrace:
    records: List[TraceRecord]
    restarts: List[RestartEvent]
    y_best: np.ndarray
    f_best: float
    f0: float
    inner_steps: int
    status: str
    config: MrmConfig
    admitted: List[np.ndarray] = field(default_factory=list)

    @property
    def gap_rel(self):
        return self.records[-1].gap_rel if self.records else None

    def write_csv(self, path_or_file, config_hash=None):
        write_trace_csv(path_or_file, self.records, config_hash)


def init_instances(dual, x0, tau0, solver, config: MrmConfig):
    tagged = _tagged(dual, solver)
    out = []
    for level in range(1, config.N + 1):
        delta = config.b ** (-level)
        problem = FomProblem(tagged, tau0)
        state = solver.initialize(x0, delta, problem)
        out.append(InstanceState(level, delta, tau0, state, problem))
    return out


def parallel_mrm_step(instances: List[InstanceState], tracker: BestTracker, dual, solver,
                      pool=None, iteration=0, admitted=None):
    """One outer iteration: step all, update the tracker, then restart.

    Returns (instances, restart events).  ``pool`` (an Executor) only changes
    where the independent steps run; the barrier keeps results identical.
    """
    def advance(inst):
        return solver.step(inst.fom, inst.problem)

    if pool is None:
        new_foms = [advance(inst) for inst in instances]
    else:
        new_foms = list(pool.map(advance, instances))
    for inst, fom in zip(instances, new_foms):
        inst.fom = fom
        inst.steps_since_restart += 1
    for inst in instances:
        if tracker.offer(dual, inst.fom.y) and admitted is not None:
            admitted.append(tracker.y_best)
    tracker.history.append(tracker.f_best)
    events = []
    tau_best = tracker.tau_best
    for inst in instances:
        if tau_best <= inst.tau / (1.0 + inst.delta):
            events.append(RestartEvent(iteration, inst.level, inst.tau, tau_best))
            inst.tau = tau_best
            inst.problem = FomProblem(inst.problem.dual, tau_best)
            inst.fom = solver.initialize(tracker.y_best, inst.delta, inst.problem,
                                         previous=inst.fom)
            inst.restart_count += 1
            inst.steps_since_restart = 0
    return instances, events


def relative_gap(p_star, f_best, f0):
    if p_star is None:
        return None
    denom = p_star - f0
    if denom == 0:
        return 0.0
    return (p_star - f_best) / denom


def parallel_mrm_run(dual, x0, config: MrmConfig, record_admitted=False) -> ParallelTrace:
    """Run N restarted instances with accuracies b^-1, ..., b^-N.

    Stops at the first of: ``max_outer`` outer iterations, ``max_inner`` total
    solver steps, ``time_budget`` seconds, relative gap <= ``target_gap``, or
    ``stall_outer`` outer iterations without any tracker improvement.
    With ``strict`` a missed target raises BudgetExhausted carrying the trace.
    """
    solver = _as_solver(config.solver, config.accel)
    x0 = np.array(x0, dtype=float)
    f0 = dual.objective(x0)
    if not (f0 > 0 and dual.feasible(x0)):
        raise InfeasibleStart("x0 must be feasible with f(x0) > 0")
    tracker = BestTracker(x0, f0, [f0])
    instances = init_instances(dual, x0, 1.0 / f0, solver, config)
    records: List[TraceRecord] = []
    restarts: List[RestartEvent] = []
    admitted = [] if record_admitted else None
    pool = ThreadPoolExecutor(config.threads) if config.threads > 1 else None
    start = time.monotonic()
    inner = 0
    status = "max_outer"
    it = 0
    last_gain = 0
    try:
        while True:
            if config.max_outer is not None and it >= config.max_outer:
                status = "max_outer"
                break
            if config.max_inner is not None and inner + config.N > config.max_inner:
                status = "max_inner"
                break
            if config.time_budget is not None and time.monotonic() - start >= config.time_budget:
                status = "time"
                break
            it += 1
            instances, events = parallel_mrm_step(instances, tracker, dual, solver, pool, it,
                                                  admitted)
            inner += config.N
            restarts.extend(events)
            if tracker.history[-1] > tracker.history[-2]:
                last_gain = it
            gap = relative_gap(config.p_star, tracker.f_best, f0)
            records.append(TraceRecord(it, 1000.0 * (time.monotonic() - start), tracker.f_best,
                                       tracker.tau_best, gap, len(restarts)))
            if config.target_gap is not None and gap <= config.target_gap:
                status = "target"
                break
            if config.stall_outer is not None and it - last_gain >= config.stall_outer:
                status = "stalled"
                break
    finally:
        if pool is not None:
            pool.shutdown()
    trace = ParallelTrace(records, restarts, tracker.y_best, tracker.f_best, f0, inner, status,
                          config, admitted or [])
    if config.strict and config.target_gap is not None and status != "target":
        raise BudgetExhausted(f"target gap not reached ({status})", trace)
    return trace


# ----------------------------------------------------------------------------
# Trace CSV


def _fmt(x):
    return "" if x is None else repr(float(x))


def write_trace_csv(path_or_file, records: Sequence[TraceRecord], config_hash=None):
    buf = io.StringIO()
    if config_hash is not None:
        buf.write(f"# config-hash={config_hash}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for r in records:
        w.writerow([r.iter, f"{r.wall_ms:.3f}", _fmt(r.f_best), _fmt(r.tau_best),
                    _fmt(r.gap_rel), r.restarts_total])
    text = buf.getvalue()
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w", newline="") as fh:
            fh.write(text)
    return text
