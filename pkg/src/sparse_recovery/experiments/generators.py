"""
Random problem generators: sensing matrices, sparse ground truths and noisy
measurements.

Each trial draws from independent streams keyed by (seed, trial, purpose), so
the matrix of trial 3 does not depend on how many numbers trial 2 consumed and
trials can run in any order or in parallel.
"""

from __future__ import annotations

import logging
from enum import IntEnum
from typing import Optional

import numpy as np

from sparse_recovery.core.linalg import DenseMatrix, Vector
from sparse_recovery.core.model import ProblemInstance

from .config import ExperimentSpec

logger = logging.getLogger(__name__)


class StreamPurpose(IntEnum):
    MATRIX = 0
    SUPPORT = 1
    VALUES = 2
    NOISE = 3


def trial_rng(seed: int, trial: int, purpose: StreamPurpose) -> np.random.Generator:
    """Counter-based generator for one (seed, trial, purpose) triple."""
    key = np.random.SeedSequence([seed, trial, int(purpose)])
    return np.random.Generator(np.random.Philox(key))


def gen_dct_matrix(
    m: int,
    n: int,
    F: float,
    rng: np.random.Generator,
    w: Optional[Vector] = None,
) -> DenseMatrix:
    """
    Oversampled DCT matrix: column j (1-based) is cos(2 pi w j / F) / sqrt(m)
    with w uniform on [0, 1]^m. Larger F gives more coherent columns. Passing
    ``w`` skips the draw.
    """
    if F <= 0:
        raise ValueError(f"F must be > 0, got {F}")
    if w is None:
        w = rng.uniform(0.0, 1.0, size=m)
    else:
        w = np.asarray(w, dtype=np.float64)
        if w.shape != (m,):
            raise ValueError(f"w must have shape ({m},), got {w.shape}")
    j = np.arange(1, n + 1, dtype=np.float64)
    return np.cos(2.0 * np.pi * np.outer(w, j) / F) / np.sqrt(m)


def gen_gaussian_matrix(
    m: int, n: int, normalize_cols: bool, rng: np.random.Generator
) -> DenseMatrix:
    """i.i.d. N(0, 1) entries; optionally each column centered and scaled to unit norm."""
    A = rng.standard_normal((m, n))
    if normalize_cols:
        A = A - A.mean(axis=0, keepdims=True)
        A = A / np.linalg.norm(A, axis=0, keepdims=True)
    return A


def sample_support(n: int, s: int, rng: np.random.Generator) -> np.ndarray:
    """s distinct indices from range(n), uniformly, by a partial Fisher-Yates shuffle."""
    if not 0 <= s <= n:
        raise ValueError(f"s must lie in [0, {n}], got {s}")
    perm = np.arange(n)
    for i in range(s):
        k = int(rng.integers(i, n))
        perm[i], perm[k] = perm[k], perm[i]
    return perm[:s].copy()


def gen_ground_truth(
    n: int,
    s: int,
    family: str,
    D: float,
    rng: np.random.Generator,
    value_rng: Optional[np.random.Generator] = None,
) -> Vector:
    """
    s-sparse vector on a uniformly drawn support.

    oversampled_dct: values sign * 10^(D u) with u ~ U[0, 1] and random signs.
    gaussian: N(0, 1) values; D is ignored.
    """
    if s > n:
        raise ValueError(f"s ({s}) must not exceed n ({n})")
    value_rng = rng if value_rng is None else value_rng
    support = sample_support(n, s, rng)
    x = np.zeros(n)
    if family == "oversampled_dct":
        signs = np.where(value_rng.standard_normal(s) < 0, -1.0, 1.0)
        x[support] = signs * 10.0 ** (D * value_rng.uniform(0.0, 1.0, size=s))
    elif family == "gaussian":
        if D != 0:
            logger.warning("Gaussian ground truth uses N(0, 1) values; D=%s is ignored", D)
        x[support] = value_rng.standard_normal(s)
    else:
        raise ValueError(f"Unknown matrix family {family!r}")
    return x


def make_instance(spec: ExperimentSpec, trial: int) -> ProblemInstance:
    """Build A, x_g and b = A x_g + sigma e for one trial of spec."""
    matrix_rng = trial_rng(spec.seed, trial, StreamPurpose.MATRIX)
    if spec.matrix_family == "oversampled_dct":
        A = gen_dct_matrix(spec.m, spec.n, spec.F, matrix_rng)
        D = spec.D
    else:
        A = gen_gaussian_matrix(spec.m, spec.n, spec.normalize_columns, matrix_rng)
        D = 0.0
    x_g = gen_ground_truth(
        spec.n,
        spec.s,
        spec.matrix_family,
        D,
        trial_rng(spec.seed, trial, StreamPurpose.SUPPORT),
        value_rng=trial_rng(spec.seed, trial, StreamPurpose.VALUES),
    )
    b = A @ x_g
    if spec.sigma > 0:
        noise_rng = trial_rng(spec.seed, trial, StreamPurpose.NOISE)
        b = b + spec.sigma * noise_rng.standard_normal(spec.m)
    return ProblemInstance(A=A, b=b, eps=spec.eps(), d=spec.d, ground_truth=x_g)
