"""
PPGA and its line-search variants, warm starts and stationarity diagnostics.
"""

from .config import LambdaSchedule, SolverConfig, SolverVariant
from .ppga import (
    InfeasibleStartError,
    SolverError,
    SolverResult,
    Termination,
    backtrack_bound,
    ppga_step,
    solve,
    solve_ppga,
    solve_ppga_ls,
    stationarity_residual,
)
from .warm_start import admm_l1_warm_start, noisy_warm_start

__all__ = [
    "LambdaSchedule",
    "SolverConfig",
    "SolverVariant",
    "InfeasibleStartError",
    "SolverError",
    "SolverResult",
    "Termination",
    "backtrack_bound",
    "ppga_step",
    "solve",
    "solve_ppga",
    "solve_ppga_ls",
    "stationarity_residual",
    "admm_l1_warm_start",
    "noisy_warm_start",
]
