"""Gauges and radial transforms on small sets, two ways each.

The oracle classes find gauges by a line search on membership; the QCQP
module has closed forms.  Both are compared with the slow bisection
references.
"""
import numpy as np

from multiradial.oracles import SetOracle, gauge_subgradient, gauge_value, radial_transform
from multiradial.qcqp import QuadraticFunction, qcqp_gauge, qcqp_radial_dual
from multiradial.reference import bisection_gauge, bisection_radial

# a disk of radius sqrt 2 about the origin
disk = SetOracle(lambda x: x @ x <= 2.0, (0.0, 0.0), lambda x: x)
for x in ([1.0, 1.0], [2.0, 2.0], [0.3, -0.1]):
    x = np.array(x)
    print(x, "gauge", gauge_value(disk, x), "subgradient", gauge_subgradient(disk, x).subgradient)

# the same disk as {1 - x.x/2 >= 0}, closed form against bisection
bowl = QuadraticFunction(np.eye(2), [0.0, 0.0], 1.0)
rng = np.random.default_rng(0)
Y = rng.standard_normal((5, 2))
fast = qcqp_gauge(bowl, np.zeros(2), Y)
slow = [bisection_gauge(lambda z: bowl(z) >= 0, np.zeros(2), y) for y in Y]
print("gauge closed form vs bisection:", np.max(np.abs(fast - slow)))

# radial transform of f(x) = 1 - x.x/2 about 0; tau scales f
for tau in (0.5, 1.0, 2.0):
    y = np.array([1.0, 0.0])
    print(f"tau={tau}: closed form {float(qcqp_radial_dual(bowl, np.zeros(2), tau, y)):.12f}",
          f"bisection {bisection_radial(bowl, np.zeros(2), y, tau):.12f}")

# transforming twice gives f back
dual = lambda z: float(qcqp_radial_dual(bowl, np.zeros(2), 1.0, z))  # noqa: E731
for y in ([0.5, 0.2], [1.0, -0.3]):
    y = np.array(y)
    print(y, "f", float(bowl(y)), "transform of transform", radial_transform(dual, np.zeros(2), y))
