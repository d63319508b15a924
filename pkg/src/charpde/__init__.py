"""Online method-of-characteristics solver for first-order quasilinear
transport equations, with method-of-lines baselines and exact references."""

from charpde.core import (
    CharacteristicPool,
    Interp,
    ProblemDef,
    ShockError,
    SolverError,
    SolverParams,
    StateView,
    Trajectory,
)
from charpde.moc import MocSolver, error_bound, simulate

__all__ = [
    "CharacteristicPool",
    "Interp",
    "MocSolver",
    "ProblemDef",
    "ShockError",
    "SolverError",
    "SolverParams",
    "StateView",
    "Trajectory",
    "error_bound",
    "simulate",
]
