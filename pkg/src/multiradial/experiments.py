"""Experiment drivers: solver comparison and center sensitivity."""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional, Tuple

import numpy as np

from .methods import MrmConfig, parallel_mrm_run, phase_one, strictly_feasible
from .plotting import plot_scatter, plot_traces, write_scatter_csv
from .qcqp import QcqpDual, QcqpInstance, boundary_point, generate_instance, spectral_norm
from .reference import ReferenceResult

SLOW_QP_M = 500


@dataclass
class ExperimentConfig:
    experiment: str = "solvers"
    n: int = 50
    ms: List[int] = field(default_factory=lambda: [10, 100])
    seed: int = 0
    b: float = 4.0
    N: int = 16
    solvers: List[str] = field(default_factory=lambda: ["subgrad", "smooth", "genGrad"])
    max_outer: int = 1000
    time_budget: Optional[float] = None
    # center experiment
    trials: int = 30
    trial_solver: str = "smooth"
    trial_outer: int = 300
    center_mode: str = "radius"
    r_range: Tuple[float, float] = (1e-6, 1e-1)
    alpha_range: Tuple[float, float] = (0.01, 1.0)
    # reference optimum: "long-run" or a reference-cache JSON path
    reference: str = "long-run"
    reference_factor: int = 10
    parallel_trials: int = 1

    def __post_init__(self):
        if self.experiment not in ("solvers", "centers"):
            raise ValueError("experiment must be 'solvers' or 'centers'")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        lo, hi = self.alpha_range
        if not 0 < lo <= hi <= 1:
            raise ValueError("alpha_range must lie in (0, 1]")
        if not 0 < self.r_range[0] <= self.r_range[1]:
            raise ValueError("r_range must be positive and ordered")
        if self.center_mode not in ("radius", "alpha"):
            raise ValueError("center_mode must be 'radius' or 'alpha'")
        self.ms = [int(m) for m in self.ms]
        self.r_range = tuple(float(v) for v in self.r_range)
        self.alpha_range = tuple(float(v) for v in self.alpha_range)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def hash(self, *extra):
        blob = json.dumps([self.to_dict(), *extra], sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


PRESETS = {
    "desk": {"n": 50, "ms": [10, 100], "trials": 30},
    "full": {"n": 200, "ms": [10, 100, 1000], "trials": 300},
}


def config_hash(payload) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ----------------------------------------------------------------------------
# Reference optimum


def long_run_reference(inst: QcqpInstance, x0, outer, b=4.0, N=16, cache_dir=None,
                       stall=500) -> ReferenceResult:
    """Best value from a long genGrad run, cached per instance hash.

    This is a reference value, not ground truth.  The run stops early after
    ``stall`` outer iterations with no improvement.
    """
    h = inst.content_hash()
    path = os.path.join(cache_dir, f"reference-{h[:16]}.json") if cache_dir else None
    if path and os.path.exists(path):
        ref = ReferenceResult.load(path)
        if ref.instance_hash == h:
            return ref
    dual = QcqpDual(inst)
    trace = parallel_mrm_run(dual, x0, MrmConfig(b=b, N=N, solver="genGrad", max_outer=outer,
                                                 stall_outer=stall))
    ref = ReferenceResult(h, float(trace.f_best), trace.y_best.tolist(), [],
                          {"source": "long-run genGrad", "outer": len(trace.records),
                           "status": trace.status})
    if path:
        os.makedirs(cache_dir, exist_ok=True)
        ref.save(path)
    return ref


def resolve_reference(cfg: ExperimentConfig, inst, x0, cache_dir):
    if cfg.reference == "long-run":
        return long_run_reference(inst, x0, cfg.reference_factor * cfg.max_outer, cfg.b, cfg.N,
                                  cache_dir)
    ref = ReferenceResult.load(cfg.reference)
    if ref.instance_hash != inst.content_hash():
        raise ValueError(f"{cfg.reference} is for another instance")
    return ref


def start_point(dual, n):
    x0 = np.zeros(n)
    if strictly_feasible(dual, x0):
        return x0
    return phase_one(dual)


# ----------------------------------------------------------------------------
# Solver comparison


def run_solver_experiment(cfg: ExperimentConfig, out_dir: str):
    """One trace per (solver, m); gap plots against iterations and wall time."""
    os.makedirs(out_dir, exist_ok=True)
    outputs = {"traces": [], "svg": []}
    for m in cfg.ms:
        inst = generate_instance(cfg.n, m, cfg.seed)
        dual = QcqpDual(inst)
        x0 = start_point(dual, cfg.n)
        ref = resolve_reference(cfg, inst, x0, out_dir)
        paths = []
        for name in cfg.solvers:
            mrm = MrmConfig(b=cfg.b, N=cfg.N, solver=name, max_outer=cfg.max_outer,
                            time_budget=cfg.time_budget, p_star=ref.p_star)
            trace = parallel_mrm_run(dual, x0, mrm)
            h = config_hash([cfg.to_dict(), inst.content_hash(), name, m])
            path = os.path.join(out_dir, f"{name}_m{m}.csv")
            trace.write_csv(path, h)
            write_metadata(path, trace, inst, ref, name)
            paths.append(path)
            outputs["traces"].append(path)
        for axis in ("iterations", "time"):
            svg = os.path.join(out_dir, f"solvers_m{m}_{axis}.svg")
            plot_traces(paths, svg, labels=list(cfg.solvers), x_axis=axis, title=f"m = {m}")
            outputs["svg"].append(svg)
    return outputs


def write_metadata(csv_path, trace, inst, ref, solver_name):
    meta = {
        "instance_hash": inst.content_hash(),
        "solver": solver_name,
        "status": trace.status,
        "outer_iterations": len(trace.records),
        "inner_steps": trace.inner_steps,
        "f0": trace.f0,
        "f_best": trace.f_best,
        "restarts": len(trace.restarts),
        "reference_p_star": None if ref is None else ref.p_star,
        "reference_source": None if ref is None else ref.constants.get("source", "file"),
        "slow_qp": solver_name == "genGrad" and inst.m >= SLOW_QP_M,
    }
    with open(csv_path + ".meta.json", "w") as fh:
        json.dump(meta, fh, indent=1)
    return meta


# ----------------------------------------------------------------------------
# Center sensitivity


def sample_centers(inst: QcqpInstance, rng, mode="radius", r_range=(1e-6, 1e-1),
                   alpha_range=(0.01, 1.0), norms=None):
    """Centers with known interior radii for every component.

    Each center sits at x_j + (alpha_j/||P_j||) grad f_j(x_j) for a random
    boundary point x_j.  In "alpha" mode each alpha_j is log-uniform in
    ``alpha_range``; in "radius" mode one target radius is drawn log-uniform
    in ``r_range`` and alpha_j is chosen to hit it (capped at 1).
    Returns (centers, radii).
    """
    funcs = inst.functions
    norms = norms if norms is not None else [spectral_norm(f.P) for f in funcs]
    target = 10.0 ** rng.uniform(*np.log10(r_range)) if mode == "radius" else None
    centers, radii = [], []
    for f, nP in zip(funcs, norms):
        u = rng.standard_normal(f.dim)
        u /= np.linalg.norm(u)
        x = boundary_point(f, u)
        g = f.gradient(x)
        gn = float(np.linalg.norm(g))
        if mode == "radius":
            alpha = min(1.0, target * nP / gn)
        else:
            alpha = 10.0 ** rng.uniform(*np.log10(alpha_range))
        centers.append(x + (alpha / nP) * g)
        radii.append(alpha * gn / nP)
    return centers, radii


def center_trial(inst, centers, solver, outer, p_star, b=4.0, N=16, x0=None):
    dual = QcqpDual(inst, centers)
    x0 = np.zeros(inst.n) if x0 is None else x0
    trace = parallel_mrm_run(dual, x0, MrmConfig(b=b, N=N, solver=solver, max_outer=outer,
                                                 p_star=p_star))
    return trace.gap_rel


def center_study(inst, trials, solver, outer, p_star, seed=0, mode="radius",
                 r_range=(1e-6, 1e-1), alpha_range=(0.01, 1.0), b=4.0, N=16, workers=1):
    """Run ``trials`` center samples; returns rows (trial, min_j R_j, final gap).

    Centers for all trials are drawn up front from one generator, so the
    result does not depend on ``workers``.
    """
    rng = np.random.default_rng(seed)
    norms = [spectral_norm(f.P) for f in inst.functions]
    draws = [sample_centers(inst, rng, mode, r_range, alpha_range, norms) for _ in range(trials)]

    def run(k):
        centers, radii = draws[k]
        return k, min(radii), center_trial(inst, centers, solver, outer, p_star, b, N)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(run, range(trials)))
    return [run(k) for k in range(trials)]


def log_gap_stats(rows):
    """(spread, slope) of log10 gap; slope is least squares against log10 R."""
    R = np.array([r[1] for r in rows])
    g = np.log10(np.maximum(np.array([r[2] for r in rows]), 1e-16))
    slope = float(np.polyfit(np.log10(R), g, 1)[0]) if len(rows) > 1 else 0.0
    return float(g.max() - g.min()), slope


def run_center_experiment(cfg: ExperimentConfig, out_dir: str):
    os.makedirs(out_dir, exist_ok=True)
    m = cfg.ms[0]
    inst = generate_instance(cfg.n, m, cfg.seed)
    dual = QcqpDual(inst)
    x0 = start_point(dual, cfg.n)
    ref = resolve_reference(cfg, inst, x0, out_dir)
    rows = center_study(inst, cfg.trials, cfg.trial_solver, cfg.trial_outer, ref.p_star,
                        cfg.seed + 1, cfg.center_mode, cfg.r_range, cfg.alpha_range, cfg.b,
                        cfg.N, cfg.parallel_trials)
    h = config_hash([cfg.to_dict(), inst.content_hash()])
    csv_path = os.path.join(out_dir, f"centers_m{m}.csv")
    write_scatter_csv(csv_path, rows, h)
    svg = os.path.join(out_dir, f"centers_m{m}.svg")
    plot_scatter([csv_path], svg, labels=[cfg.trial_solver], title=f"m = {m}")
    spread, slope = log_gap_stats(rows)
    return {"csv": csv_path, "svg": svg, "spread": spread, "slope": slope}
