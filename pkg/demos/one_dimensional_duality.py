"""The rescaled dual on a one-variable problem.

max 1 + 2x - x^2/2 subject to x <= 0.5, centers 2 (objective) and 0.
Scaling the objective by 1/p* puts the dual optimum at exactly one, and
for larger scalings 1 - d(tau) is squeezed between two multiples of
tau p* - 1.
"""
import numpy as np

from multiradial.qcqp import QcqpInstance, QuadraticFunction
from multiradial.reference import (compute_theory_constants, grid_d_tau, grid_slack,
                                   sandwich_check)

inst = QcqpInstance(QuadraticFunction([[1.0]], [-2.0], 1.0),
                    [QuadraticFunction([[0.0]], [1.0], 0.5)],
                    centers=[np.array([2.0]), np.array([0.0])])

c = compute_theory_constants(inst)
print(f"p* = {c.p_star} at x* = {c.x_star[0]}")
print(f"R0 = {c.R0:.6f}  D0 = {c.D0:.6f}  rho = {c.rho:.6f}  eta = {c.eta:.6f}")

d, y = grid_d_tau(inst, 1.0 / c.p_star, return_argmin=True)
print(f"d(1/p*) = {d:.6f}, minimizer {y[0]:.4f}")

taus = np.linspace(1.0 / c.p_star, 10.0 / c.p_star, 8)
rep = sandwich_check(c, taus, lambda t: grid_d_tau(inst, t),
                     grid_slack(inst, inst.resolved_centers(), 1e-4))
print(f"{'tau':>8} {'lower':>10} {'1-d':>10} {'upper':>10}")
for r in rep.rows:
    print(f"{r.tau:8.4f} {r.lower:10.6f} {r.middle:10.6f} {r.upper:10.6f}")
print("all bounds hold:", rep.ok)
