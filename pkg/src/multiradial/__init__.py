"""Parameter-free first-order methods for constrained concave maximization
via multiradial duality, with a QCQP test bed."""

from .exceptions import *  # noqa: F401,F403
from .methods import (BestTracker, InstanceState, MrmConfig, ParallelTrace, TraceRecord,
                      known_opt_solve, mrm_run, parallel_mrm_run, parallel_mrm_step, phase_one,
                      write_trace_csv)
from .oracles import (ConstraintOracle, ConvexIdentifier, FunctionObjective, IdentifierKind,
                      MultiradialDual, SetOracle, gauge_subgradient, gauge_value,
                      radial_dual_subgradient, radial_dual_value, radial_transform)
from .qcqp import (QcqpDual, QcqpInstance, QuadraticFunction, generate_instance, qcqp_gauge,
                   qcqp_radial_dual, sample_controlled_center)
from .solvers import (SOLVERS, AccelConfig, FiniteMax, FomProblem, make_solver, simplex_qp,
                      smoothed_eval)

__version__ = "0.1.0"

__all__ = [
    "BestTracker", "InstanceState", "MrmConfig", "ParallelTrace", "TraceRecord",
    "known_opt_solve", "mrm_run", "parallel_mrm_run", "parallel_mrm_step", "phase_one",
    "write_trace_csv", "ConstraintOracle", "ConvexIdentifier", "FunctionObjective",
    "IdentifierKind", "MultiradialDual", "SetOracle", "gauge_subgradient", "gauge_value",
    "radial_dual_subgradient", "radial_dual_value", "radial_transform", "QcqpDual",
    "QcqpInstance", "QuadraticFunction", "generate_instance", "qcqp_gauge", "qcqp_radial_dual",
    "sample_controlled_center", "SOLVERS", "AccelConfig", "FiniteMax", "FomProblem",
    "make_solver", "simplex_qp", "smoothed_eval",
]
