"""Restart accuracies for the single-instance scheme.

A fixed delta keeps restarting only while the dual optimum sits far enough
below one, so progress stops short of p*.  Shrinking delta with 1 - d(tau)
keeps the restarts coming.  d(tau) comes from the grid oracle, which is
only possible on a tiny problem; the parallel method removes that need.
"""
import numpy as np

from multiradial.methods import mrm_run
from multiradial.qcqp import QcqpDual, QcqpInstance, QuadraticFunction
from multiradial.reference import compute_theory_constants, grid_d_tau

inst = QcqpInstance(QuadraticFunction([[1.0]], [-2.0], 1.0),
                    [QuadraticFunction([[0.0]], [1.0], 0.5)],
                    centers=[np.array([2.0]), np.array([0.0])])
dual = QcqpDual(inst)
p_star = 1.875
rho = compute_theory_constants(inst).rho

fixed = mrm_run(dual, np.zeros(1), 0.1, solver="genGrad", max_steps=3000)
adaptive = mrm_run(dual, np.zeros(1),
                   lambda k, tau: max(rho * (1.0 - grid_d_tau(inst, tau)) / 2.0, 1e-9),
                   solver="genGrad", max_steps=3000)
for name, tr in (("delta = 0.1", fixed), ("delta = rho(1-d)/2", adaptive)):
    gap = (p_star - tr.f_best) / (p_star - 1.0)
    print(f"{name:20s} restarts {len(tr.restart_steps):3d}  f_best {tr.f_best:.10f}  gap {gap:.1e}")
