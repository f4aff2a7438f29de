"""Measure-based supervisory path planning (C++ core)."""

from ._nustar import (
    ConvergenceError,
    InvariantError,
    ParseError,
    Plan,
    PreconditionError,
    SolverError,
    chi_goal_bound,
    identify,
    measure,
    optimize,
    plan,
    synthesize_log,
)

__all__ = [
    "ConvergenceError",
    "InvariantError",
    "ParseError",
    "Plan",
    "PreconditionError",
    "SolverError",
    "chi_goal_bound",
    "identify",
    "measure",
    "optimize",
    "plan",
    "synthesize_log",
]
