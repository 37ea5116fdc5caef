"""
Parameterized proximal-gradient solvers for Q_lambda.

Each step takes C = Q_lambda(x) and applies

    x+ = prox_{alpha * lambda * rho_{C / lambda}}(x - alpha * grad h(x))

PPGA uses a fixed alpha < 1/L. The line-search variants start from a
Barzilai-Borwein trial step and backtrack until

    Q(x+) <= max(C over the last N+1 iterates) - a/2 * ||x+ - x||^2

with N = 0 for PPGA_ML (monotone) and N > 0 for PPGA_NL.
"""

from __future__ import annotations

import logging
import math
import time
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Deque, List, Optional

import numpy as np

from sparse_recovery.core.linalg import Vector
from sparse_recovery.core.model import (
    DomainError,
    PenaltyObjective,
    PointEvaluation,
    evaluate_point,
)
from sparse_recovery.core.prox import ProxParams, ProxSelection, prox_rho
from sparse_recovery.solvers.config import (
    SolverConfig,
    SolverVariant,
    resolve_step_bounds,
)

logger = logging.getLogger(__name__)

REL_CHANGE_FLOOR = 1e-300
# relative slack on the acceptance test, a few ulps of the reference value
ACCEPT_ULPS = 4.0


class InfeasibleStartError(DomainError):
    pass


class SolverError(RuntimeError):
    pass


class Termination(str, Enum):
    REL_TOL = "RelTol"
    MAX_ITER = "MaxIter"
    LINE_SEARCH_FAIL = "LineSearchFail"


@dataclass(frozen=True, eq=False)
class SolverResult:
    """
    Output of one solve.

    objective_trace[0] is Q_lambda(x0); entry k+1 is the value after step k, so
    it holds iterations + 1 values. step_trace, prox_case_trace, backtrack_trace
    and lambda_trace hold one entry per step.
    """

    x_final: Vector
    objective_trace: np.ndarray
    step_trace: np.ndarray
    iterations: int
    termination: Termination
    stationarity_residual: float
    prox_case_trace: List[str] = field(default_factory=list)
    backtrack_trace: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    lambda_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))
    final_alpha: float = float("nan")
    iterates: Optional[np.ndarray] = None


class LineSearchState:
    """Window of recent objective values plus the previous point for BB steps."""

    def __init__(self, window: int, initial_value: float):
        self.recent_C: Deque[float] = deque([initial_value], maxlen=window + 1)
        self.prev_x: Optional[Vector] = None
        self.prev_grad: Optional[Vector] = None

    def reference(self) -> float:
        return max(self.recent_C)

    def reset(self, value: float) -> None:
        self.recent_C.clear()
        self.recent_C.append(value)

    def record(self, point: PointEvaluation, accepted: PointEvaluation) -> None:
        self.prev_x = point.x
        self.prev_grad = point.gradient
        self.recent_C.append(accepted.q)

    def trial_step(self, point: PointEvaluation, alpha_lo: float, alpha_hi: float) -> float:
        """||dx||^2 / |<dx, dh>| clamped to [alpha_lo, alpha_hi]; alpha_hi when undefined."""
        if self.prev_x is None or self.prev_grad is None:
            return alpha_hi
        dx = point.x - self.prev_x
        dh = point.gradient - self.prev_grad
        inner = float(dx @ dh)
        if inner == 0.0:
            return alpha_hi
        return min(max(float(dx @ dx) / abs(inner), alpha_lo), alpha_hi)


def _prox_gradient_step(
    obj: PenaltyObjective, point: PointEvaluation, alpha: float
) -> ProxSelection:
    params = ProxParams(
        beta=alpha * obj.lam,
        gamma=point.q / obj.lam,
        d=obj.problem.d,
    )
    return prox_rho(point.x - alpha * point.gradient, params)


def _feasible_point(obj: PenaltyObjective, x: Vector) -> PointEvaluation:
    point = evaluate_point(obj, x)
    if not point.feasible:
        raise DomainError("x must be nonzero and inside the ball ||x||_2 <= d")
    return point


def ppga_step(obj: PenaltyObjective, x: Vector, alpha: float) -> Vector:
    """One proximal-gradient step on f - C g with C = Q_lambda(x)."""
    if not alpha > 0.0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    point = _feasible_point(obj, x)
    return _prox_gradient_step(obj, point, alpha).result


def stationarity_residual(obj: PenaltyObjective, x: Vector, alpha: float) -> float:
    """||x - ppga_step(x)|| / (1 + ||x||); zero exactly at fixed points."""
    if not alpha > 0.0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    point = _feasible_point(obj, x)
    step = _prox_gradient_step(obj, point, alpha).result
    return float(np.linalg.norm(point.x - step)) / (1.0 + point.norm2)


def backtrack_bound(obj: PenaltyObjective, cfg: SolverConfig, alpha_hi: float, M: float) -> int:
    """
    Worst-case number of backtracking reductions per iteration.

    Any step alpha <= 1 / (a M + L) passes the acceptance test when M bounds
    ||x|| on the level set of the start, so starting from alpha_hi at most
    ceil(-log(alpha_hi (a M + L)) / log(eta) + 1) reductions are needed.
    """
    if alpha_hi <= 0.0 or M < 0.0:
        raise ValueError("alpha_hi must be > 0 and M >= 0")
    scale = alpha_hi * (cfg.a * M + obj.lipschitz)
    if scale <= 1.0:
        return 1
    return int(math.ceil(-math.log(scale) / math.log(cfg.eta) + 1.0))


class _Run:
    """Mutable bookkeeping for one solve; turned into a SolverResult at exit."""

    def __init__(self, obj: PenaltyObjective, x0: Vector, cfg: SolverConfig, keep_iterates: bool):
        self.base = obj
        self.obj = obj
        self.cfg = cfg
        point = evaluate_point(obj, x0)
        if not point.feasible:
            raise InfeasibleStartError(
                "x0 must be nonzero with ||x0||_2 <= d "
                f"(got ||x0||_2 = {point.norm2:.6e}, d = {obj.problem.d:.6e})"
            )
        self.point = point
        self.best = point
        self.objective: List[float] = [point.q]
        self.steps: List[float] = []
        self.cases: List[str] = []
        self.backtracks: List[int] = []
        self.lambdas: List[float] = []
        self.iterates: Optional[List[Vector]] = [point.x] if keep_iterates else None

    def update_lambda(self, iteration: int) -> bool:
        """Apply the lambda schedule; True when lambda changed."""
        schedule = self.cfg.lambda_schedule
        if schedule is None:
            return False
        lam = schedule.lambda_at(self.base.lam, iteration)
        if lam == self.obj.lam:
            return False
        self.obj = self.base.with_lambda(lam)
        self.point = evaluate_point(self.obj, self.point.x)
        # earlier values were taken under another lambda
        self.best = self.point
        return True

    def advance(
        self, selection: ProxSelection, accepted: PointEvaluation, alpha: float, bt: int
    ) -> float:
        prev_norm = self.point.norm2
        change = float(np.linalg.norm(accepted.x - self.point.x)) / max(prev_norm, REL_CHANGE_FLOOR)
        self.point = accepted
        if accepted.q < self.best.q:
            self.best = accepted
        self.objective.append(accepted.q)
        self.steps.append(alpha)
        self.cases.append(selection.case_id.value)
        self.backtracks.append(bt)
        self.lambdas.append(self.obj.lam)
        if self.iterates is not None:
            self.iterates.append(accepted.x)
        return change

    def finish(self, termination: Termination, alpha: float) -> SolverResult:
        """A failed line search returns the lowest-Q iterate seen under the current lambda."""
        final = self.best if termination == Termination.LINE_SEARCH_FAIL else self.point
        residual = stationarity_residual(self.obj, final.x, alpha)
        return SolverResult(
            x_final=final.x,
            objective_trace=np.asarray(self.objective),
            step_trace=np.asarray(self.steps),
            iterations=len(self.steps),
            termination=termination,
            stationarity_residual=residual,
            prox_case_trace=self.cases,
            backtrack_trace=np.asarray(self.backtracks, dtype=np.int64),
            lambda_trace=np.asarray(self.lambdas),
            final_alpha=alpha,
            iterates=None if self.iterates is None else np.vstack(self.iterates),
        )


def solve_ppga(
    obj: PenaltyObjective,
    x0: Vector,
    cfg: SolverConfig,
    keep_iterates: bool = False,
) -> SolverResult:
    """Fixed-step PPGA from a feasible x0."""
    alpha, _ = resolve_step_bounds(cfg, obj.lipschitz, SolverVariant.PPGA)
    run = _Run(obj, x0, cfg, keep_iterates)
    max_iter = cfg.iteration_cap(obj.problem.n)
    termination = Termination.MAX_ITER
    started = time.perf_counter()

    for k in range(max_iter):
        run.update_lambda(k)
        selection = _prox_gradient_step(run.obj, run.point, alpha)
        candidate = evaluate_point(run.obj, selection.result)
        if not candidate.feasible:
            raise SolverError(
                f"PPGA iterate left the domain at iteration {k} (case {selection.case_id.value})"
            )
        change = run.advance(selection, candidate, alpha, 0)
        if change <= cfg.rel_tol:
            termination = Termination.REL_TOL
            break

    logger.debug(
        "PPGA finished: iterations=%s termination=%s Q=%.6e elapsed=%.3fs",
        len(run.steps),
        termination.value,
        run.point.q,
        time.perf_counter() - started,
    )
    return run.finish(termination, alpha)


def solve_ppga_ls(
    obj: PenaltyObjective,
    x0: Vector,
    cfg: SolverConfig,
    keep_iterates: bool = False,
) -> SolverResult:
    """PPGA with BB trial steps and (non)monotone backtracking; cfg.window is N."""
    variant = SolverVariant.PPGA_ML if cfg.window == 0 else SolverVariant.PPGA_NL
    alpha_lo, alpha_hi = resolve_step_bounds(cfg, obj.lipschitz, variant)
    run = _Run(obj, x0, cfg, keep_iterates)
    state = LineSearchState(cfg.window, run.point.q)
    max_iter = cfg.iteration_cap(obj.problem.n)
    termination = Termination.MAX_ITER
    last_alpha = alpha_hi
    started = time.perf_counter()

    for k in range(max_iter):
        if run.update_lambda(k):
            # values under the previous lambda are not comparable
            state.reset(run.point.q)
            logger.debug("Iteration %s: lambda -> %.6e", k, run.obj.lam)

        point = run.point
        reference = state.reference()
        slack = ACCEPT_ULPS * np.finfo(float).eps * abs(reference)
        alpha = state.trial_step(point, alpha_lo, alpha_hi)
        accepted: Optional[PointEvaluation] = None
        selection: Optional[ProxSelection] = None

        for bt in range(cfg.backtrack_cap + 1):
            selection = _prox_gradient_step(run.obj, point, alpha)
            candidate = evaluate_point(run.obj, selection.result)
            if candidate.feasible:
                diff = candidate.x - point.x
                dist_sq = float(diff @ diff)
                if dist_sq == 0.0 or candidate.q <= reference - 0.5 * cfg.a * dist_sq + slack:
                    accepted = candidate
                    break
            alpha *= cfg.eta

        if accepted is None or selection is None:
            logger.warning(
                "Line search failed at iteration %s after %s reductions (Q=%.6e)",
                k,
                cfg.backtrack_cap,
                point.q,
            )
            termination = Termination.LINE_SEARCH_FAIL
            break

        state.record(point, accepted)
        last_alpha = alpha
        change = run.advance(selection, accepted, alpha, bt)
        if change <= cfg.rel_tol:
            termination = Termination.REL_TOL
            break

    logger.debug(
        "%s finished: iterations=%s termination=%s Q=%.6e elapsed=%.3fs",
        variant.value,
        len(run.steps),
        termination.value,
        run.point.q,
        time.perf_counter() - started,
    )
    return run.finish(termination, last_alpha)


def solve(
    obj: PenaltyObjective,
    x0: Vector,
    cfg: SolverConfig,
    variant: SolverVariant,
    keep_iterates: bool = False,
) -> SolverResult:
    """Run the named variant. PPGA_ML forces N = 0; PPGA_NL needs N >= 1."""
    variant = SolverVariant(variant)
    if variant == SolverVariant.PPGA:
        return solve_ppga(obj, x0, cfg, keep_iterates)
    if variant == SolverVariant.PPGA_ML:
        return solve_ppga_ls(obj, x0, cfg.model_copy(update={"window": 0}), keep_iterates)
    if cfg.window < 1:
        raise ValueError("PPGA_NL needs window >= 1")
    return solve_ppga_ls(obj, x0, cfg, keep_iterates)
