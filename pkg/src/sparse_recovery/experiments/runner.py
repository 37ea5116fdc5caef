"""
Trial loop: build an instance, warm start, solve, score.

Trials are independent and may run in a process pool; records are sorted by
trial index before anything is summarized, so the worker count never changes
the output.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from multiprocessing import Pool, cpu_count
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from sparse_recovery.core.linalg import Vector, min_norm_lsq
from sparse_recovery.core.model import PenaltyObjective, ProblemInstance
from sparse_recovery.solvers.ppga import SolverResult, solve
from sparse_recovery.solvers.warm_start import admm_l1_warm_start, noisy_warm_start

from .config import ExperimentSpec, RunFile
from .generators import make_instance
from .metrics import (
    OracleMSEError,
    is_success,
    metric_mse,
    metric_oracle_mse,
    metric_ree_err,
    metric_rel_err,
)

logger = logging.getLogger(__name__)

TRIAL_COLUMNS = [
    "trial",
    "seed",
    "rel_err",
    "ree_err",
    "mse",
    "success",
    "iterations",
    "termination",
    "wall_time_ms",
]
TRACE_COLUMNS = [
    "iteration",
    "q_lambda",
    "alpha",
    "prox_case",
    "backtracks",
    "lambda",
    "dist_to_final",
]
SWEEP_METRICS = ["success_rate", "mean_rel_err", "mean_ree_err", "mean_mse", "mean_iters"]


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    seed_used: int
    rel_err: float
    ree_err: float
    mse: float
    success: bool
    iterations: int
    wall_time_ms: float
    termination: str
    stationarity_residual: float = float("nan")
    oracle_mse: float = float("nan")
    trace: Optional[pd.DataFrame] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ExperimentResult:
    spec: ExperimentSpec
    records: List[TrialRecord]
    summary: Dict[str, Any]


def _effective_worker_count(trial_count: int, requested: int) -> int:
    cpus = max(1, cpu_count())
    return max(1, min(requested, cpus, trial_count))


def initial_point(spec: ExperimentSpec, prob: ProblemInstance) -> Vector:
    """
    l1-ADMM warm start, pulled into the noise tube for noisy runs. A zero start
    lies outside the domain of Q_lambda and is replaced by A^+ b.
    """
    x_l1 = admm_l1_warm_start(
        prob.A, prob.b, weight=spec.admm.weight, iters=spec.admm.iters, rho=spec.admm.rho
    )
    x0 = noisy_warm_start(prob, x_l1) if spec.noisy else x_l1
    if not np.any(x0):
        logger.warning("Warm start is zero; starting from the least-squares solution instead")
        x0 = min_norm_lsq(prob.A, prob.b)
    return x0


def trace_frame(result: SolverResult) -> pd.DataFrame:
    """One row per iterate; row 0 is x0 and has empty step columns."""
    steps = result.iterations
    if result.iterates is not None:
        dist = np.linalg.norm(result.iterates - result.x_final, axis=1)
    else:
        dist = np.full(steps + 1, np.nan)
    return pd.DataFrame(
        {
            "iteration": np.arange(steps + 1),
            "q_lambda": result.objective_trace,
            "alpha": np.concatenate([[np.nan], result.step_trace]),
            "prox_case": [""] + list(result.prox_case_trace),
            "backtracks": pd.array([None] + result.backtrack_trace.tolist(), dtype="Int64"),
            "lambda": np.concatenate([[np.nan], result.lambda_trace]),
            "dist_to_final": dist,
        },
        columns=TRACE_COLUMNS,
    )


def _failed_record(
    spec: ExperimentSpec, trial: int, started: float, error: Exception
) -> TrialRecord:
    return TrialRecord(
        trial_index=trial,
        seed_used=spec.seed,
        rel_err=float("nan"),
        ree_err=float("nan"),
        mse=float("nan"),
        success=False,
        iterations=0,
        wall_time_ms=(time.perf_counter() - started) * 1000.0,
        termination=f"Failed:{type(error).__name__}",
    )


def run_trial(spec: ExperimentSpec, trial: int, keep_trace: bool = False) -> TrialRecord:
    """
    Run one trial. Numerical and domain failures are recorded in the
    termination field instead of being raised.
    """
    started = time.perf_counter()
    try:
        prob = make_instance(spec, trial)
        obj = PenaltyObjective.build(prob, spec.resolved_lambda())
        x0 = initial_point(spec, prob)
        result = solve(obj, x0, spec.solver_settings(), spec.solver, keep_iterates=keep_trace)
    except (ValueError, RuntimeError) as e:
        logger.warning("Trial %s failed: %s: %s", trial, type(e).__name__, e)
        return _failed_record(spec, trial, started, e)
    elapsed_ms = (time.perf_counter() - started) * 1000.0

    x_g = prob.ground_truth
    rel_err = metric_rel_err(result.x_final, x_g)
    oracle = float("nan")
    if spec.sigma > 0:
        try:
            oracle = metric_oracle_mse(prob.A, np.flatnonzero(x_g), spec.sigma)
        except OracleMSEError as e:
            logger.warning("Trial %s: oracle MSE unavailable: %s", trial, e)

    record = TrialRecord(
        trial_index=trial,
        seed_used=spec.seed,
        rel_err=rel_err,
        ree_err=metric_ree_err(result.x_final, x_g),
        mse=metric_mse(result.x_final, x_g),
        success=is_success(rel_err),
        iterations=result.iterations,
        wall_time_ms=elapsed_ms,
        termination=result.termination.value,
        stationarity_residual=result.stationarity_residual,
        oracle_mse=oracle,
        trace=trace_frame(result) if keep_trace else None,
    )
    logger.info(
        "Trial %s: rel_err=%.3e iterations=%s termination=%s (%.0f ms)",
        trial,
        record.rel_err,
        record.iterations,
        record.termination,
        record.wall_time_ms,
    )
    return record


def _run_trial_args(args: Tuple[ExperimentSpec, int, bool]) -> TrialRecord:
    return run_trial(*args)


def records_frame(records: List[TrialRecord]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "trial": r.trial_index,
                "seed": r.seed_used,
                "rel_err": r.rel_err,
                "ree_err": r.ree_err,
                "mse": r.mse,
                "success": r.success,
                "iterations": r.iterations,
                "termination": r.termination,
                "wall_time_ms": r.wall_time_ms,
            }
            for r in records
        ],
        columns=TRIAL_COLUMNS,
    )


def _json_float(value: float) -> Optional[float]:
    value = float(value)
    return None if math.isnan(value) else value


def summarize(records: List[TrialRecord]) -> Dict[str, Any]:
    """Means, population standard deviations and counts over trial records."""
    df = records_frame(records)
    extra = pd.DataFrame(
        {
            "stationarity_residual": [r.stationarity_residual for r in records],
            "oracle_mse": [r.oracle_mse for r in records],
        }
    )
    successes = int(df["success"].sum())
    summary: Dict[str, Any] = {"trials": len(records), "successes": successes}
    summary["success_rate"] = successes / len(records) if records else float("nan")
    for column in ("rel_err", "ree_err", "mse", "iterations"):
        values = df[column].astype(float)
        summary[f"{column}_mean"] = _json_float(values.mean())
        summary[f"{column}_std"] = _json_float(values.std(ddof=0))
    summary["oracle_mse_mean"] = _json_float(extra["oracle_mse"].mean())
    summary["stationarity_residual_max"] = _json_float(extra["stationarity_residual"].max())
    summary["termination_counts"] = {
        str(k): int(v) for k, v in sorted(df["termination"].value_counts().items())
    }
    return summary


def run_experiment(
    spec: ExperimentSpec, threads: int = 1, keep_traces: bool = False
) -> ExperimentResult:
    """Run every trial of spec, in a process pool when threads > 1."""
    if spec.matrix_family == "gaussian" and spec.D != 0:
        logger.warning("Gaussian ground truths use N(0, 1) values; D=%s is ignored", spec.D)
    workers = _effective_worker_count(spec.trials, threads)
    logger.info(
        "Experiment: family=%s m=%s n=%s s=%s solver=%s trials=%s workers=%s",
        spec.matrix_family,
        spec.m,
        spec.n,
        spec.s,
        spec.solver.value,
        spec.trials,
        workers,
    )
    jobs = [(spec, trial, keep_traces) for trial in range(spec.trials)]
    if workers > 1:
        with Pool(processes=workers) as pool:
            records = pool.map(_run_trial_args, jobs)
    else:
        records = [_run_trial_args(job) for job in jobs]
    records = sorted(records, key=lambda r: r.trial_index)
    return ExperimentResult(spec=spec, records=records, summary=summarize(records))


def run_sweep(run_file: RunFile, threads: int = 1) -> pd.DataFrame:
    """One row per grid value, in the order given in the sweep section."""
    if run_file.experiment is None or run_file.sweep is None:
        raise ValueError("sweep needs both an experiment and a sweep section")
    axis = run_file.sweep.axis
    rows = []
    for value, spec in zip(run_file.sweep.values, run_file.sweep.grid(run_file.experiment)):
        summary = run_experiment(spec, threads=threads).summary
        if axis in ("s", "m"):
            value = int(value)
        elif axis == "solver":
            value = spec.solver.value
        rows.append(
            {
                axis: value,
                "success_rate": summary["success_rate"],
                "mean_rel_err": summary["rel_err_mean"],
                "mean_ree_err": summary["ree_err_mean"],
                "mean_mse": summary["mse_mean"],
                "mean_iters": summary["iterations_mean"],
            }
        )
    return pd.DataFrame(rows, columns=[axis] + SWEEP_METRICS)
