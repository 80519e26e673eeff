"""Piecewise and adaptive Carleman embeddings of polynomial ODEs."""

from .analysis import (
    ErrorSeries,
    arrival_time,
    fixed_point_convergence,
    partial_fraction_residues,
    relative_error,
    time_of_flight_1d,
)
from .core import (
    CarlemanOperator,
    PolyVectorField,
    assemble_operator,
    assemble_transfer_block,
    decode,
    encode,
    instability_flag,
    shift_field,
    taylor_shift_check,
)
from .integrate import IntegratorConfig, Trajectory, rk4_nonlinear_solve
from .problems import CUBIC_CASES, PROBLEMS, ProblemSpec, get_problem
from .solvers import AceConfig, GridSpec, ace_run, gce_run, pce_run, sce_run

__all__ = [
    "AceConfig", "CarlemanOperator", "CUBIC_CASES", "ErrorSeries", "GridSpec", "IntegratorConfig",
    "PROBLEMS", "PolyVectorField", "ProblemSpec", "Trajectory",
    "ace_run", "arrival_time", "assemble_operator", "assemble_transfer_block", "decode", "encode",
    "fixed_point_convergence", "gce_run", "get_problem", "instability_flag", "partial_fraction_residues",
    "pce_run", "relative_error", "rk4_nonlinear_solve", "sce_run", "shift_field", "taylor_shift_check",
    "time_of_flight_1d",
]
