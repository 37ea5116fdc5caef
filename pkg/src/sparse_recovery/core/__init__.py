"""
Numerical core: dense kernels, the smoothed l1/l2 penalty objective and its
proximity operators.
"""

from .linalg import (
    DimensionError,
    LeastSquaresConvergenceError,
    matvec,
    min_norm_lsq,
    rmatvec,
    spectral_norm_sq,
)
from .model import (
    DomainError,
    PenaltyObjective,
    ProblemDefinitionError,
    ProblemInstance,
    envelope_gradient,
    envelope_value,
    q_lambda,
    ratio_parameter,
)
from .prox import ProxCase, ProxParams, ProxSelection, prox_oracle, prox_rho, soft_threshold

__all__ = [
    "DimensionError",
    "LeastSquaresConvergenceError",
    "matvec",
    "min_norm_lsq",
    "rmatvec",
    "spectral_norm_sq",
    "DomainError",
    "PenaltyObjective",
    "ProblemDefinitionError",
    "ProblemInstance",
    "envelope_gradient",
    "envelope_value",
    "q_lambda",
    "ratio_parameter",
    "ProxCase",
    "ProxParams",
    "ProxSelection",
    "prox_oracle",
    "prox_rho",
    "soft_threshold",
]
