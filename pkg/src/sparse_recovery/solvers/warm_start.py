"""
Starting points for the solvers: a few ADMM sweeps on the l1-regularized least
squares problem, and the projection of that point into the noise tube.
"""

from __future__ import annotations

import logging
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from sparse_recovery.core.linalg import DenseMatrix, Vector, as_matrix, as_vector, min_norm_lsq
from sparse_recovery.core.model import ProblemInstance
from sparse_recovery.core.prox import soft_threshold
from sparse_recovery.solvers.ppga import SolverError

logger = logging.getLogger(__name__)


def admm_l1_warm_start(
    A: DenseMatrix,
    b: Vector,
    weight: float = 0.08,
    iters: Optional[int] = None,
    rho: float = 1.0,
) -> Vector:
    """
    Run exactly ``iters`` ADMM iterations (default 2n) on
    min weight*||x||_1 + 1/2 ||Ax - b||^2.

    The x-update system (A^T A + rho I) is factored once. For wide A the
    factorization is taken on the m x m matrix (rho I + A A^T) and applied
    through the matrix inversion lemma. Returns the sparse z iterate.
    """
    if weight <= 0:
        raise ValueError(f"weight must be > 0, got {weight}")
    if rho <= 0:
        raise ValueError(f"rho must be > 0, got {rho}")
    A = as_matrix(A)
    m, n = A.shape
    b = as_vector(b, m, name="b")
    if iters is None:
        iters = 2 * n
    if iters < 1:
        raise ValueError(f"iters must be >= 1, got {iters}")

    Atb = A.T @ b
    wide = m < n
    try:
        if wide:
            factor = cho_factor(rho * np.eye(m) + A @ A.T)
        else:
            factor = cho_factor(A.T @ A + rho * np.eye(n))
    except LinAlgError as e:
        raise SolverError(f"ADMM factorization failed: {e}") from e

    def solve_x(q: Vector) -> Vector:
        if wide:
            # (A^T A + rho I)^{-1} q = (q - A^T (rho I + A A^T)^{-1} A q) / rho
            return (q - A.T @ cho_solve(factor, A @ q)) / rho
        return cho_solve(factor, q)

    z = np.zeros(n)
    u = np.zeros(n)
    threshold = weight / rho
    for _ in range(iters):
        x = solve_x(Atb + rho * (z - u))
        z = soft_threshold(x + u, threshold)
        u = u + x - z

    logger.debug(
        "ADMM warm start: iters=%s nnz=%s residual=%.3e",
        iters,
        int(np.count_nonzero(z)),
        float(np.linalg.norm(A @ z - b)),
    )
    return z


def noisy_warm_start(prob: ProblemInstance, x_l1: Vector) -> Vector:
    """
    Move x_l1 toward A^+ b until the residual reaches eps.

    Returns x_l1 unchanged when ||A x_l1 - b|| <= eps, otherwise
    A^+ b + eps (x_l1 - A^+ b) / ||A x_l1 - b||.
    """
    x_l1 = as_vector(x_l1, prob.n, name="x_l1")
    residual = float(np.linalg.norm(prob.A @ x_l1 - prob.b))
    if residual <= prob.eps:
        return x_l1.copy()
    x_ls = min_norm_lsq(prob.A, prob.b)
    return x_ls + prob.eps * (x_l1 - x_ls) / residual
