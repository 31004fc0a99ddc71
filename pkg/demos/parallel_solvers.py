"""The parallel restarted method with each inner solver.

Runs subgradient, smoothing and generalized-gradient inner methods on one
random QCQP (n=30, m=8), with b = 4 and N = 16 instances, and writes one
trace CSV per solver plus a gap plot into ./demo_out.
"""
import os

import numpy as np

from multiradial.experiments import long_run_reference
from multiradial.methods import MrmConfig, parallel_mrm_run
from multiradial.plotting import plot_traces
from multiradial.qcqp import QcqpDual, generate_instance

out = "demo_out"
os.makedirs(out, exist_ok=True)
inst = generate_instance(30, 8, seed=4)
dual = QcqpDual(inst)
x0 = np.zeros(inst.n)  # feasible by construction

ref = long_run_reference(inst, x0, 3000, cache_dir=out)
print("reference p* (long genGrad run):", ref.p_star)

paths = []
for solver in ("subgrad", "smooth", "genGrad"):
    trace = parallel_mrm_run(dual, x0, MrmConfig(solver=solver, max_outer=400,
                                                 p_star=ref.p_star))
    path = os.path.join(out, f"{solver}.csv")
    trace.write_csv(path)
    paths.append(path)
    print(f"{solver:8s} f_best {trace.f_best:.8f}  gap {trace.gap_rel:.1e}  "
          f"restarts {len(trace.restarts)}")

plot_traces(paths, os.path.join(out, "gaps.svg"), labels=["subgrad", "smooth", "genGrad"])
print("wrote", os.path.join(out, "gaps.svg"))
