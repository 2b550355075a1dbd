"""Approximation algorithms for parity-constrained clustering.

The package solves facility location and k-center problems in which every
open facility (or center) may require an odd or an even number of assigned
clients.  Exhaustive oracles in :mod:`parclust.oracle` certify the
approximation guarantees on small instances.
"""

from parclust.errors import (
    InfeasibleInstance,
    InvariantViolation,
    ParclustError,
    SizeGuardExceeded,
    StructuralError,
)
from parclust.instance import (
    Facility,
    Instance,
    ParityLabel,
    Solution,
    feasibility_precheck,
    metric_closure,
    parity_violations,
    reduce_unconstrained,
    solution_cost,
    validate_instance,
)
from parclust.fl import SolverConfig, solve_all_even, solve_fl, solve_general
from parclust.kcenter import KCenterInstance, solve_kcenter

__all__ = [
    "Facility",
    "InfeasibleInstance",
    "Instance",
    "InvariantViolation",
    "KCenterInstance",
    "ParclustError",
    "ParityLabel",
    "SizeGuardExceeded",
    "Solution",
    "SolverConfig",
    "StructuralError",
    "feasibility_precheck",
    "metric_closure",
    "parity_violations",
    "reduce_unconstrained",
    "solution_cost",
    "solve_all_even",
    "solve_fl",
    "solve_general",
    "solve_kcenter",
    "validate_instance",
]

__version__ = "0.1.0"
