"""
The smoothed l1/l2 penalty problem.

    Q_lambda(x) = (lambda * ||x||_1 + env(Ax)) / ||x||_2   on D \\ {0},  +inf elsewhere

where env(Ax) = 1/2 * max(0, ||Ax - b||_2 - eps)^2 is the Moreau envelope of
the indicator of the eps-ball around b, and D = {x : ||x||_2 <= d}.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import DenseMatrix, Vector, as_matrix, as_vector, spectral_norm_sq

logger = logging.getLogger(__name__)

# ||x||_2 <= d * (1 + BALL_RTOL) counts as inside D; prox outputs land exactly on the sphere
BALL_RTOL = 1e-12
LIPSCHITZ_SAFETY = 1.001


class ProblemDefinitionError(ValueError):
    pass


class DomainError(ValueError):
    """Raised when a point outside dom(Q_lambda) is used where a finite value is required."""


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Sensing matrix, measurements, noise bound eps, ball radius d, optional ground truth."""

    A: DenseMatrix
    b: Vector
    eps: float
    d: float
    ground_truth: Optional[Vector] = None

    def __post_init__(self) -> None:
        try:
            A = as_matrix(self.A)
            b = as_vector(self.b, A.shape[0], name="b")
            gt = (
                None
                if self.ground_truth is None
                else as_vector(self.ground_truth, A.shape[1], name="ground_truth")
            )
        except ValueError as e:
            raise ProblemDefinitionError(str(e)) from e
        if not np.isfinite(self.eps) or self.eps < 0:
            raise ProblemDefinitionError(f"eps must be a finite number >= 0, got {self.eps}")
        if not np.isfinite(self.d) or self.d <= 0:
            raise ProblemDefinitionError(f"d must be a finite number > 0, got {self.d}")
        b_norm = float(np.linalg.norm(b))
        if not b_norm > self.eps:
            raise ProblemDefinitionError(
                f"||b||_2 = {b_norm:.6e} must exceed eps = {self.eps:.6e}"
            )
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "eps", float(self.eps))
        object.__setattr__(self, "d", float(self.d))
        if gt is not None:
            gt.setflags(write=False)
            object.__setattr__(self, "ground_truth", gt)

    @property
    def m(self) -> int:
        return int(self.A.shape[0])

    @property
    def n(self) -> int:
        return int(self.A.shape[1])


@dataclass(frozen=True, eq=False)
class PenaltyObjective:
    """
    A problem instance together with the penalty weight lambda and the Lipschitz
    constant L of grad h (an upper estimate of ||A||_2^2).
    """

    problem: ProblemInstance
    lam: float
    lipschitz: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.lam) or self.lam <= 0:
            raise ProblemDefinitionError(f"lambda must be > 0, got {self.lam}")
        if not np.isfinite(self.lipschitz) or self.lipschitz <= 0:
            raise ProblemDefinitionError(f"lipschitz must be > 0, got {self.lipschitz}")

    @classmethod
    def build(
        cls,
        problem: ProblemInstance,
        lam: float,
        safety: float = LIPSCHITZ_SAFETY,
    ) -> "PenaltyObjective":
        """Estimate ||A||_2^2 by power iteration and inflate it by ``safety``."""
        estimate = spectral_norm_sq(problem.A)
        if estimate <= 0.0:
            raise ProblemDefinitionError("Sensing matrix is zero; Q_lambda has no gradient scale")
        logger.debug("||A||_2^2 estimate %.6e, L = %.6e", estimate, safety * estimate)
        return cls(problem=problem, lam=float(lam), lipschitz=safety * estimate)

    def with_lambda(self, lam: float) -> "PenaltyObjective":
        """Same problem and L, new lambda."""
        return dataclasses.replace(self, lam=float(lam))


@dataclass(frozen=True, eq=False)
class PointEvaluation:
    """Everything the solvers need about one iterate, computed from a single residual."""

    x: Vector
    norm2: float
    norm1: float
    residual_norm: float
    envelope: float
    gradient: Vector
    q: float

    @property
    def feasible(self) -> bool:
        return bool(np.isfinite(self.q))


def in_ball(x: Vector, d: float) -> bool:
    return float(np.linalg.norm(x)) <= d * (1.0 + BALL_RTOL)


def _envelope_parts(obj: PenaltyObjective, x: Vector) -> tuple[Vector, float, float]:
    prob = obj.problem
    x = as_vector(x, prob.n)
    r = prob.A @ x - prob.b
    rn = float(np.linalg.norm(r))
    return r, rn, 0.5 * max(0.0, rn - prob.eps) ** 2


def _gradient_from_residual(obj: PenaltyObjective, r: Vector, rn: float) -> Vector:
    eps = obj.problem.eps
    if rn <= eps:
        return np.zeros(obj.problem.n)
    return (1.0 - eps / rn) * (obj.problem.A.T @ r)


def envelope_value(obj: PenaltyObjective, x: Vector) -> float:
    """1/2 * max(0, ||Ax - b||_2 - eps)^2."""
    return _envelope_parts(obj, x)[2]


def envelope_gradient(obj: PenaltyObjective, x: Vector) -> Vector:
    """(1 - eps / ||Ax - b||_2)_+ * A^T (Ax - b); zero inside the tube."""
    r, rn, _ = _envelope_parts(obj, x)
    return _gradient_from_residual(obj, r, rn)


def q_lambda(obj: PenaltyObjective, x: Vector) -> float:
    """Q_lambda(x), with +inf for x = 0 or x outside D."""
    x = as_vector(x, obj.problem.n)
    norm2 = float(np.linalg.norm(x))
    if norm2 == 0.0 or norm2 > obj.problem.d * (1.0 + BALL_RTOL):
        return float("inf")
    env = envelope_value(obj, x)
    return (obj.lam * float(np.abs(x).sum()) + env) / norm2


def ratio_parameter(obj: PenaltyObjective, x: Vector) -> float:
    """C = (f(x) + h(x)) / g(x) for the current iterate; requires x in D \\ {0}."""
    value = q_lambda(obj, x)
    if not np.isfinite(value):
        raise DomainError("ratio parameter needs a nonzero x inside the ball ||x||_2 <= d")
    return value


def evaluate_point(obj: PenaltyObjective, x: Vector) -> PointEvaluation:
    """
    Objective, envelope, gradient and norms of x from one product Ax.

    Infeasible points get q = +inf; their gradient is still returned.
    """
    x = as_vector(x, obj.problem.n)
    r, rn, env = _envelope_parts(obj, x)
    grad = _gradient_from_residual(obj, r, rn)
    norm2 = float(np.linalg.norm(x))
    norm1 = float(np.abs(x).sum())
    if norm2 == 0.0 or norm2 > obj.problem.d * (1.0 + BALL_RTOL):
        q = float("inf")
    else:
        q = (obj.lam * norm1 + env) / norm2
    return PointEvaluation(
        x=x,
        norm2=norm2,
        norm1=norm1,
        residual_norm=rn,
        envelope=env,
        gradient=grad,
        q=q,
    )
