"""Solvers and benchmarks for misspecified constrained variational
inequalities.

An instance couples a monotone primal operator F(x, theta) over a convex
set with nonlinear inequality constraints f(x, theta) <= 0, where the
parameter theta is itself pinned down by a strongly monotone learning
problem. The main solver interleaves augmented-Lagrangian primal-dual
steps with parameter learning; projection-based baselines on the lifted
primal-dual space are included for comparison.
"""

from .alm import DivergenceError, SolverState, StepSchedule, alm_step, \
    derive_schedule, initial_state, solve
from .auglag import AugLagEval, dual_update, penalty_from_values, \
    phi_scalar, phi_total
from .baselines import LagrangianVIOperator, extragradient_step, \
    solve_baseline, tikhonov_step
from .cournot import CournotConfig, generate, instance_family
from .metrics import GapOracleConfig, infeasibility, minty_gap, \
    solve_tiny_kkt, theta_error
from .problem import KKTTriple, LipschitzHints, ProblemInstance, \
    check_monotonicity, evaluate_kkt_residual
from .sets import Box, BoxHalfspace, ConvexSet, NonnegOrthant, project
from .trace import TRACE_COLUMNS, TraceEvaluator, TraceRow, \
    read_trace_csv, write_compare_csv, write_trace_csv

__version__ = "0.1.0"

__all__ = [
    "AugLagEval", "Box", "BoxHalfspace", "ConvexSet", "CournotConfig",
    "DivergenceError", "GapOracleConfig", "KKTTriple",
    "LagrangianVIOperator", "LipschitzHints", "NonnegOrthant",
    "ProblemInstance", "SolverState", "StepSchedule", "TRACE_COLUMNS",
    "TraceEvaluator", "TraceRow", "alm_step", "check_monotonicity",
    "derive_schedule", "dual_update", "evaluate_kkt_residual",
    "extragradient_step", "generate", "infeasibility", "initial_state",
    "instance_family", "minty_gap", "penalty_from_values", "phi_scalar",
    "phi_total", "project", "read_trace_csv", "solve", "solve_baseline",
    "solve_tiny_kkt", "theta_error", "tikhonov_step", "write_compare_csv",
    "write_trace_csv",
]
