"""
Self-checks behind the `prox-check` and `grad-check` commands.

prox check: compares prox_rho against the search-based prox_oracle on random
inputs, cycling through the four closed-form branches.

grad check: compares envelope_gradient with central differences of
envelope_value away from the boundary of the noise tube.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from sparse_recovery.core.linalg import min_norm_lsq
from sparse_recovery.core.model import (
    PenaltyObjective,
    ProblemInstance,
    envelope_gradient,
    envelope_value,
)
from sparse_recovery.core.prox import (
    ProxCase,
    ProxParams,
    ProxSelection,
    prox_objective,
    prox_oracle,
    prox_rho,
)
from sparse_recovery.experiments.config import GradCheckSpec, ProxCheckSpec

logger = logging.getLogger(__name__)

ProxFunction = Callable[[np.ndarray, ProxParams], ProxSelection]

_CASE_ORDER = (ProxCase.I, ProxCase.II, ProxCase.III, ProxCase.IV)


@dataclass
class ProxCheckReport:
    trials: int
    max_gap: float
    worst_y: Optional[List[float]]
    worst_params: Optional[ProxParams]
    case_counts: Dict[str, int] = field(default_factory=dict)
    tolerance: float = 1e-7

    @property
    def passed(self) -> bool:
        return self.max_gap <= self.tolerance

    def worst_case(self) -> str:
        if self.worst_params is None:
            return "none"
        p = self.worst_params
        return f"y={self.worst_y!r} beta={p.beta!r} gamma={p.gamma!r} d={p.d!r}"


@dataclass
class GradCheckReport:
    samples: int
    skipped: int
    max_rel_err: float
    worst_case: Optional[Dict[str, object]]
    tolerance: float = 1e-5

    @property
    def passed(self) -> bool:
        return self.max_rel_err <= self.tolerance


def synthesize_prox_input(
    case: ProxCase, rng: np.random.Generator
) -> tuple[np.ndarray, ProxParams]:
    """Random (y, beta, gamma, d) whose max |y_i| falls in the given branch."""
    n = int(rng.integers(1, 4))
    beta = float(rng.uniform(0.01, 5.0))
    gamma = float(rng.uniform(0.1, 10.0))
    d = float(rng.uniform(0.5, 20.0))
    v = rng.standard_normal(n)
    index = int(np.argmax(np.abs(v)))
    v = v / abs(v[index])

    if case == ProxCase.I:
        y = v * beta * float(rng.uniform(1.05, 4.0))
    elif case == ProxCase.II:
        y = v * beta * 0.9
        y[index] = np.sign(v[index]) * beta
    elif case == ProxCase.III:
        lo = max(0.0, 1.0 - gamma)
        y = v * beta * (lo + (1.0 - lo) * float(rng.uniform(0.05, 0.95)))
    else:
        gamma = float(rng.uniform(0.1, 0.99))
        y = v * (1.0 - gamma) * beta * float(rng.uniform(0.0, 1.0))
    return y, ProxParams(beta=beta, gamma=gamma, d=d)


def run_prox_check(spec: ProxCheckSpec, prox_fn: ProxFunction = prox_rho) -> ProxCheckReport:
    rng = np.random.default_rng(spec.seed)
    report = ProxCheckReport(
        trials=spec.trials,
        max_gap=0.0,
        worst_y=None,
        worst_params=None,
        case_counts={case.value: 0 for case in _CASE_ORDER},
        tolerance=spec.tolerance,
    )
    for trial in range(spec.trials):
        y, params = synthesize_prox_input(_CASE_ORDER[trial % len(_CASE_ORDER)], rng)
        selection = prox_fn(y, params)
        report.case_counts[selection.case_id.value] = (
            report.case_counts.get(selection.case_id.value, 0) + 1
        )
        closed = prox_objective(selection.result, y, params)
        oracle = prox_objective(prox_oracle(y, params, grid=spec.grid), y, params)
        gap = abs(closed - oracle)
        if not np.isfinite(gap) or gap > report.max_gap:
            report.max_gap = float("inf") if not np.isfinite(gap) else gap
            report.worst_y = y.tolist()
            report.worst_params = params
    logger.info(
        "Prox check: trials=%s max_gap=%.3e cases=%s",
        report.trials,
        report.max_gap,
        report.case_counts,
    )
    return report


def relative_gradient_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """||ga - gn|| / max(||ga||, ||gn||), and 0 when both vanish."""
    scale = max(float(np.linalg.norm(analytic)), float(np.linalg.norm(numeric)))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(analytic - numeric)) / scale


def central_difference(obj: PenaltyObjective, x: np.ndarray, step: float) -> np.ndarray:
    grad = np.zeros_like(x)
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = step
        grad[i] = (envelope_value(obj, x + e) - envelope_value(obj, x - e)) / (2.0 * step)
    return grad


def run_grad_check(spec: GradCheckSpec) -> GradCheckReport:
    """
    Half of the points sit near A^+ b so the tube interior is exercised too.
    eps stays below ||b|| so every instance is well posed.
    """
    rng = np.random.default_rng(spec.seed)
    report = GradCheckReport(
        samples=spec.samples, skipped=0, max_rel_err=0.0, worst_case=None, tolerance=spec.tolerance
    )
    for sample in range(spec.samples):
        m = int(rng.integers(1, spec.max_dim + 1))
        n = int(rng.integers(1, spec.max_dim + 1))
        A = rng.standard_normal((m, n))
        b = rng.standard_normal(m)
        if sample % 2 == 0:
            x = rng.standard_normal(n)
        else:
            x = min_norm_lsq(A, b) + 0.1 * rng.standard_normal(n)
        residual = float(np.linalg.norm(A @ x - b))
        eps = min(float(rng.uniform(0.0, 2.0)) * residual, 0.999 * float(np.linalg.norm(b)))
        if abs(residual - eps) <= spec.boundary_gap:
            report.skipped += 1
            continue

        problem = ProblemInstance(A=A, b=b, eps=eps, d=1e7)
        obj = PenaltyObjective(problem=problem, lam=1.0, lipschitz=1.0)
        analytic = envelope_gradient(obj, x)
        numeric = central_difference(obj, x, spec.step)
        err = relative_gradient_error(analytic, numeric)
        if err > report.max_rel_err:
            report.max_rel_err = err
            report.worst_case = {
                "sample": sample,
                "m": m,
                "n": n,
                "eps": eps,
                "residual": residual,
                "rel_err": err,
            }
    logger.info(
        "Gradient check: samples=%s skipped=%s max_rel_err=%.3e",
        report.samples,
        report.skipped,
        report.max_rel_err,
    )
    return report
