from .base import (BudgetExceeded, FixedBitsResult, Optimum, ScResult, Solver, SolverConfig,
                   SolverError, SolverLaunchError, SolverStats, Status, Verdict, as_solver,
                   make_solver)
from .evaluate import UnassignedError, eval_model, eval_term

__all__ = [
    "BudgetExceeded", "FixedBitsResult", "Optimum", "ScResult", "Solver", "SolverConfig",
    "SolverError", "SolverLaunchError", "SolverStats", "Status", "UnassignedError", "Verdict",
    "as_solver", "eval_model", "eval_term", "make_solver",
]
