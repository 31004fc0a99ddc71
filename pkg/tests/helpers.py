"""Small analytic test problems shared across test modules."""

import numpy as np

from multiradial.oracles import FunctionObjective, SetOracle
from multiradial.qcqp import QcqpInstance, QuadraticFunction


def ball(radius=np.sqrt(2.0), center=(0.0, 0.0)):
    """{x : 1/2 ||x||^2 <= radius^2 / 2} seen from ``center``."""
    return SetOracle(lambda x: 0.5 * x @ x <= 0.5 * radius**2, center, lambda x: x)


def shifted_ball(radius, center):
    """Ball of ``radius`` around ``center``, seen from its own center."""
    c = np.asarray(center, dtype=float)
    return SetOracle(lambda x: (x - c) @ (x - c) <= radius**2, c, lambda x: x - c)


def ellipse(diag=(4.0, 1.0)):
    D = np.diag(diag)
    return SetOracle(lambda x: 0.5 * x @ D @ x <= 1.0, (0.0, 0.0), lambda x: D @ x)


def halfspace(a=(1.0, 0.0), b=0.5, center=(0.0, 0.0)):
    a = np.asarray(a, dtype=float)
    return SetOracle(lambda x: a @ x <= b, center, lambda x: a)


def concave_bowl(center=(0.0, 0.0)):
    """f(x) = 1 - 1/2 ||x||^2."""
    return FunctionObjective(lambda x: 1.0 - 0.5 * x @ x, lambda x: -x, center)


def one_dim_instance():
    """max 1 + 2x - x^2/2  s.t.  x <= 0.5, centers e0 = 2 and e1 = 0."""
    f0 = QuadraticFunction([[1.0]], [-2.0], 1.0)
    g = QuadraticFunction([[0.0]], [1.0], 0.5)
    return QcqpInstance(f0, [g], centers=[np.array([2.0]), np.array([0.0])])


def two_dim_instance():
    """max 2 - x1 - 1/2 ||x||^2 over a unit disk shifted to (0.3, 0) and x2 <= 0.4."""
    f0 = QuadraticFunction(np.eye(2), [1.0, 0.0], 2.0)
    disk = QuadraticFunction(np.eye(2), [-0.3, 0.0], 0.5 - 0.045)
    half = QuadraticFunction(np.zeros((2, 2)), [0.0, 1.0], 0.4)
    return QcqpInstance(f0, [disk, half],
                        centers=[np.array([-1.0, 0.0]), np.array([0.3, 0.0]), np.zeros(2)])
