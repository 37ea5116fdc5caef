"""
Recovery metrics.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from sparse_recovery.core.linalg import DenseMatrix, Vector, as_matrix

SUCCESS_TOL = 1e-3


class OracleMSEError(ValueError):
    pass


def metric_rel_err(x_star: Vector, x_g: Vector) -> float:
    """||x* - x_g|| / ||x_g||."""
    x_g = np.asarray(x_g, dtype=np.float64)
    ref = float(np.linalg.norm(x_g))
    if ref == 0.0:
        raise ValueError("relative error is undefined for a zero ground truth")
    return float(np.linalg.norm(np.asarray(x_star, dtype=np.float64) - x_g)) / ref


def metric_ree_err(x_star: Vector, x_g: Vector) -> float:
    """||x* - x_g|| / max(1, ||x_g||)."""
    x_g = np.asarray(x_g, dtype=np.float64)
    ref = max(1.0, float(np.linalg.norm(x_g)))
    return float(np.linalg.norm(np.asarray(x_star, dtype=np.float64) - x_g)) / ref


def metric_mse(x_star: Vector, x_g: Vector) -> float:
    """Recovery error ||x* - x_g||_2 as reported for the noisy studies (not squared)."""
    diff = np.asarray(x_star, dtype=np.float64) - np.asarray(x_g, dtype=np.float64)
    return float(np.linalg.norm(diff))


def is_success(rel_err: float) -> bool:
    return bool(rel_err <= SUCCESS_TOL)


def metric_oracle_mse(A: DenseMatrix, support: Sequence[int], sigma: float) -> float:
    """
    sigma^2 * trace((A_S^T A_S)^{-1}): expected squared error of least squares
    restricted to the true support S.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    A = as_matrix(A)
    idx = np.asarray(list(support), dtype=np.int64)
    if idx.size == 0:
        return 0.0
    A_s = A[:, idx]
    gram = A_s.T @ A_s
    try:
        factor = cho_factor(gram)
    except LinAlgError as e:
        raise OracleMSEError(
            f"Support Gram matrix of size {idx.size} is not positive definite"
        ) from e
    inverse = cho_solve(factor, np.eye(idx.size))
    return sigma**2 * float(np.trace(inverse))


def dynamic_range(x_g: Vector) -> float:
    """max |x_i| / min |x_i| over the nonzeros of x_g."""
    mags = np.abs(np.asarray(x_g, dtype=np.float64))
    mags = mags[mags > 0]
    if mags.size == 0:
        raise ValueError("dynamic range is undefined for a zero vector")
    return float(mags.max() / mags.min())


def mutual_coherence(A: DenseMatrix) -> float:
    """max over i != j of |<a_i, a_j>| / (||a_i|| ||a_j||)."""
    A = as_matrix(A)
    if A.shape[1] < 2:
        return 0.0
    norms = np.linalg.norm(A, axis=0)
    if np.any(norms == 0):
        raise ValueError("mutual coherence is undefined with a zero column")
    unit = A / norms
    gram = np.abs(unit.T @ unit)
    np.fill_diagonal(gram, 0.0)
    return float(gram.max())
