"""
Dense matrix-vector kernels plus the two numerical utilities the solvers need:
a power-iteration estimate of ||A||_2^2 and a minimum-norm least-squares solve.

Matrices and vectors are plain float64 numpy arrays; nothing here mutates its
inputs.
"""

from __future__ import annotations

import logging
from typing import Optional

import numpy as np
from scipy.sparse.linalg import lsqr

logger = logging.getLogger(__name__)

DenseMatrix = np.ndarray
Vector = np.ndarray


class DimensionError(ValueError):
    pass


class LeastSquaresConvergenceError(RuntimeError):
    """Raised when LSQR misses its tolerance within the iteration cap."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


def as_matrix(A: DenseMatrix) -> DenseMatrix:
    """Validate and return A as a finite 2-D float64 array."""
    M = np.asarray(A, dtype=np.float64)
    if M.ndim != 2:
        raise DimensionError(f"Expected a 2-D matrix, got an array with ndim={M.ndim}")
    if M.shape[0] < 1 or M.shape[1] < 1:
        raise DimensionError(f"Matrix must have at least one row and column, got {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DimensionError("Matrix entries must be finite")
    return M


def as_vector(x: Vector, length: Optional[int] = None, name: str = "x") -> Vector:
    """Validate and return x as a finite 1-D float64 array of the given length."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got ndim={v.ndim}")
    if length is not None and v.shape[0] != length:
        raise DimensionError(f"{name} has length {v.shape[0]}, expected {length}")
    if not np.all(np.isfinite(v)):
        raise DimensionError(f"{name} entries must be finite")
    return v


def matvec(A: DenseMatrix, x: Vector) -> Vector:
    """Return Ax."""
    A = np.asarray(A, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if A.ndim != 2 or x.ndim != 1 or A.shape[1] != x.shape[0]:
        raise DimensionError(
            f"Cannot multiply matrix of shape {A.shape} with vector of shape {x.shape}"
        )
    return A @ x


def rmatvec(A: DenseMatrix, y: Vector) -> Vector:
    """Return A^T y."""
    A = np.asarray(A, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if A.ndim != 2 or y.ndim != 1 or A.shape[0] != y.shape[0]:
        raise DimensionError(
            f"Cannot multiply transpose of matrix {A.shape} with vector of shape {y.shape}"
        )
    return A.T @ y


def spectral_norm_sq(
    A: DenseMatrix,
    tol: float = 1e-10,
    max_iter: Optional[int] = None,
) -> float:
    """
    Estimate ||A||_2^2 by power iteration on A^T A.

    Starts from the normalized all-ones vector so repeated calls agree bit for
    bit. The returned value is the Rayleigh quotient ||Av||^2 of a unit vector v,
    hence never larger than the true squared norm. Iteration stops once the
    relative change of the quotient is at most ``tol`` or after ``max_iter``
    steps (default 10*(m+n)).
    """
    if tol <= 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    M = as_matrix(A)
    m, n = M.shape
    if max_iter is None:
        max_iter = 10 * (m + n)
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")

    v = np.full(n, 1.0 / np.sqrt(n))
    Av = M @ v
    estimate = float(Av @ Av)
    for it in range(max_iter):
        w = M.T @ Av
        w_norm = float(np.linalg.norm(w))
        if w_norm == 0.0:
            # v lies in null(A); all-ones start only hits this for A = 0 in practice
            return estimate
        v = w / w_norm
        Av = M @ v
        updated = float(Av @ Av)
        change = abs(updated - estimate)
        estimate = updated
        if change <= tol * estimate:
            logger.debug("Power iteration converged after %s steps: %.6e", it + 1, estimate)
            break
    return estimate


def min_norm_lsq(
    A: DenseMatrix,
    b: Vector,
    tol: float = 1e-10,
    max_iter: Optional[int] = None,
) -> Vector:
    """
    Minimum-norm solution of min ||Ax - b||_2, i.e. A^+ b.

    LSQR started from zero keeps its iterates in range(A^T), so it converges to
    A^+ b whether or not A has full rank. ``tol`` is used for both LSQR stopping
    tolerances; the residual reported on failure is ||A^T (Ax - b)|| / ||A^T b||.
    """
    M = as_matrix(A)
    m, n = M.shape
    rhs_b = as_vector(b, m, name="b")

    Atb = M.T @ rhs_b
    Atb_norm = float(np.linalg.norm(Atb))
    if Atb_norm == 0.0:
        return np.zeros(n)
    if max_iter is None:
        max_iter = max(50 * min(m, n), 100)

    result = lsqr(M, rhs_b, atol=tol, btol=tol, conlim=0.0, iter_lim=max_iter)
    x, istop = result[0], result[1]
    residual = float(np.linalg.norm(M.T @ (M @ x - rhs_b))) / Atb_norm
    if istop == 7 and residual > tol:
        raise LeastSquaresConvergenceError(
            f"LSQR did not reach tolerance {tol:.3e} within {max_iter} iterations "
            f"(last residual {residual:.3e})",
            residual=residual,
        )
    return x
