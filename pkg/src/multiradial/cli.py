"""Command-line entry point: ``multiradial <subcommand> ...``.

Config files are JSON objects whose keys mirror the long flag names (with
underscores); flags given on the command line win.  ``MRM_SEED`` overrides
the seed from either source.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from .exceptions import MultiradialError
from .experiments import (PRESETS, SLOW_QP_M, ExperimentConfig, config_hash, run_center_experiment,
                          run_solver_experiment, write_metadata)
from .methods import MrmConfig, parallel_mrm_run, phase_one, strictly_feasible
from .plotting import plot_scatter, plot_traces
from .qcqp import QcqpDual, QcqpInstance, generate_instance
from .reference import ReferenceResult
from .solvers import SOLVERS


def _load_config(path):
    if not path:
        return {}
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise SystemExit(f"{path}: config must be a JSON object")
    return data


def _merge(args, keys, defaults):
    """File values, then explicit flags, then MRM_SEED."""
    merged = dict(defaults)
    merged.update({k: v for k, v in _load_config(getattr(args, "config", None)).items()})
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            merged[k] = v
    if "seed" in keys and os.environ.get("MRM_SEED"):
        merged["seed"] = int(os.environ["MRM_SEED"])
    return merged


def cmd_generate(args):
    cfg = _merge(args, ["n", "m", "seed"], {"n": 200, "m": 10, "seed": 0})
    inst = generate_instance(int(cfg["n"]), int(cfg["m"]), int(cfg["seed"]))
    inst.save(args.out)
    print(inst.content_hash())
    return 0


def cmd_solve(args):
    keys = ["solver", "b", "N", "iters", "inner_budget", "time_budget", "target_gap", "threads"]
    cfg = _merge(args, keys, {"solver": "genGrad", "b": 4.0, "N": 16, "iters": 1000,
                              "threads": 1})
    inst = QcqpInstance.load(args.instance)
    dual = QcqpDual(inst)
    x0 = np.zeros(inst.n) if args.x0 is None else np.asarray(json.loads(args.x0), dtype=float)
    if not strictly_feasible(dual, x0):
        x0 = phase_one(dual, x_start=x0)
    ref = None
    if args.p_star:
        ref = ReferenceResult.load(args.p_star)
        if ref.instance_hash != inst.content_hash():
            raise SystemExit(f"{args.p_star} does not match {args.instance}")
    mrm = MrmConfig(b=float(cfg["b"]), N=int(cfg["N"]), solver=cfg["solver"],
                    max_outer=cfg.get("iters"), max_inner=cfg.get("inner_budget"),
                    time_budget=cfg.get("time_budget"), target_gap=cfg.get("target_gap"),
                    p_star=None if ref is None else ref.p_star, threads=int(cfg["threads"]))
    if mrm.solver == "genGrad" and inst.m >= SLOW_QP_M:
        print(f"note: genGrad solves an {inst.m + 1}-weight QP every step; expect slow progress",
              file=sys.stderr)
    t0 = time.monotonic()
    trace = parallel_mrm_run(dual, x0, mrm)
    h = config_hash([cfg, inst.content_hash(), x0.tolist()])
    trace.write_csv(args.out, h)
    write_metadata(args.out, trace, inst, ref, mrm.solver)
    print(f"f_best={trace.f_best!r} status={trace.status} outer={len(trace.records)} "
          f"restarts={len(trace.restarts)} seconds={time.monotonic() - t0:.2f}")
    return 0


EXPERIMENT_KEYS = ["n", "ms", "seed", "b", "N", "solvers", "max_outer", "time_budget", "trials",
                   "trial_solver", "trial_outer", "center_mode", "r_range", "alpha_range",
                   "reference", "reference_factor", "parallel_trials"]


def _experiment_config(args, experiment):
    defaults = dict(PRESETS[args.preset]) if args.preset else {}
    cfg = _merge(args, EXPERIMENT_KEYS, defaults)
    cfg["experiment"] = experiment
    return ExperimentConfig.from_dict(cfg)


def cmd_experiment_solvers(args):
    cfg = _experiment_config(args, "solvers")
    out = run_solver_experiment(cfg, args.out_dir)
    for path in out["traces"] + out["svg"]:
        print(path)
    return 0


def cmd_experiment_centers(args):
    cfg = _experiment_config(args, "centers")
    out = run_center_experiment(cfg, args.out_dir)
    print(out["csv"])
    print(out["svg"])
    print(f"log10-gap spread={out['spread']:.3f} slope={out['slope']:.3f}")
    return 0


def cmd_plot(args):
    if args.mode == "scatter":
        plot_scatter(args.csv, args.out, args.labels, args.title)
    else:
        plot_traces(args.csv, args.out, args.labels, args.x, args.title)
    print(args.out)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="multiradial", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a random QCQP instance")
    g.add_argument("--n", type=int)
    g.add_argument("--m", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--out", required=True)
    g.add_argument("--config")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="run the parallel restarted method on an instance")
    s.add_argument("instance")
    s.add_argument("--solver", choices=sorted(SOLVERS))
    s.add_argument("--b", type=float)
    s.add_argument("--N", type=int)
    s.add_argument("--iters", type=int, help="outer iteration budget")
    s.add_argument("--inner-budget", dest="inner_budget", type=int)
    s.add_argument("--time-budget", dest="time_budget", type=float, help="seconds")
    s.add_argument("--target-gap", dest="target_gap", type=float)
    s.add_argument("--p-star", dest="p_star", help="reference-cache JSON")
    s.add_argument("--x0", help="start point as a JSON list (default: origin)")
    s.add_argument("--threads", type=int)
    s.add_argument("--out", required=True)
    s.add_argument("--config")
    s.set_defaults(func=cmd_solve)

    for name, func, helptext in (
            ("experiment-solvers", cmd_experiment_solvers, "compare inner solvers"),
            ("experiment-centers", cmd_experiment_centers, "center sensitivity study")):
        e = sub.add_parser(name, help=helptext)
        e.add_argument("--config")
        e.add_argument("--preset", choices=sorted(PRESETS))
        e.add_argument("--out-dir", dest="out_dir", default="results")
        e.add_argument("--n", type=int)
        e.add_argument("--ms", type=int, nargs="+")
        e.add_argument("--seed", type=int)
        e.add_argument("--b", type=float)
        e.add_argument("--N", type=int)
        e.add_argument("--solvers", nargs="+", choices=sorted(SOLVERS))
        e.add_argument("--max-outer", dest="max_outer", type=int)
        e.add_argument("--time-budget", dest="time_budget", type=float)
        e.add_argument("--trials", type=int)
        e.add_argument("--trial-solver", dest="trial_solver", choices=sorted(SOLVERS))
        e.add_argument("--trial-outer", dest="trial_outer", type=int)
        e.add_argument("--center-mode", dest="center_mode", choices=["radius", "alpha"])
        e.add_argument("--r-range", dest="r_range", type=float, nargs=2)
        e.add_argument("--alpha-range", dest="alpha_range", type=float, nargs=2)
        e.add_argument("--reference", help="'long-run' or a reference-cache JSON")
        e.add_argument("--reference-factor", dest="reference_factor", type=int)
        e.add_argument("--parallel-trials", dest="parallel_trials", type=int)
        e.set_defaults(func=func)

    pl = sub.add_parser("plot", help="render trace or scatter CSVs to SVG")
    pl.add_argument("csv", nargs="+")
    pl.add_argument("--out", required=True)
    pl.add_argument("--mode", choices=["line", "scatter"], default="line")
    pl.add_argument("--x", choices=["iterations", "time"], default="iterations")
    pl.add_argument("--labels", nargs="+")
    pl.add_argument("--title")
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (MultiradialError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
