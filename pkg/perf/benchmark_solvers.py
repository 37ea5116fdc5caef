"""
Solver benchmark on the noise-free oversampled-DCT setting (m=64, n=1024, s=5,
F=1, D=1, lambda=0.008).

Each run builds one instance, computes the ADMM warm start once, then times
PPGA, PPGA_ML and PPGA_NL from that same start and reports iterations, wall
time and relative error per variant.

Usage (from repository root):

  PYTHONPATH=src python perf/benchmark_solvers.py --runs 5

Or with an editable install (pip install -e .), PYTHONPATH is not required.
"""

from __future__ import annotations

import argparse
import statistics
import sys
import time
from pathlib import Path

_REPO_ROOT = Path(__file__).resolve().parent.parent
_SRC = _REPO_ROOT / "src"
if _SRC.is_dir() and str(_SRC) not in sys.path:
    sys.path.insert(0, str(_SRC))

from sparse_recovery.core.model import PenaltyObjective  # noqa: E402
from sparse_recovery.experiments.config import ExperimentSpec  # noqa: E402
from sparse_recovery.experiments.generators import make_instance  # noqa: E402
from sparse_recovery.experiments.metrics import metric_rel_err  # noqa: E402
from sparse_recovery.experiments.runner import initial_point  # noqa: E402
from sparse_recovery.solvers.config import SolverVariant  # noqa: E402
from sparse_recovery.solvers.ppga import solve  # noqa: E402


def _parse_args() -> argparse.Namespace:
    p = argparse.ArgumentParser(description="Benchmark PPGA variants on a shared instance.")
    p.add_argument("--runs", type=int, default=5, help="Instances to benchmark (default: 5)")
    p.add_argument("--n", type=int, default=1024, help="Signal length (default: 1024)")
    p.add_argument("--m", type=int, default=64, help="Measurements (default: 64)")
    p.add_argument("--s", type=int, default=5, help="Sparsity (default: 5)")
    p.add_argument("--seed", type=int, default=0, help="Root seed (default: 0)")
    return p.parse_args()


def main() -> int:
    args = _parse_args()
    if args.runs < 1:
        print("error: --runs must be >= 1", file=sys.stderr)
        return 1
    spec = ExperimentSpec(m=args.m, n=args.n, s=args.s, F=1.0, D=1.0, seed=args.seed)

    print(
        f"Benchmark: DCT m={spec.m} n={spec.n} s={spec.s}, lambda={spec.resolved_lambda()}, "
        f"{args.runs} instances\n",
        flush=True,
    )
    stats: dict[str, dict[str, list[float]]] = {
        v.value: {"iters": [], "time": [], "rel_err": []} for v in SolverVariant
    }
    for trial in range(args.runs):
        prob = make_instance(spec, trial)
        obj = PenaltyObjective.build(prob, spec.resolved_lambda())
        x0 = initial_point(spec, prob)
        for variant in SolverVariant:
            t0 = time.perf_counter()
            result = solve(obj, x0, spec.solver_config, variant)
            elapsed = time.perf_counter() - t0
            rel = metric_rel_err(result.x_final, prob.ground_truth)
            stats[variant.value]["iters"].append(result.iterations)
            stats[variant.value]["time"].append(elapsed)
            stats[variant.value]["rel_err"].append(rel)
            print(
                f"  instance {trial + 1}/{args.runs} {variant.value:8s}: "
                f"iters={result.iterations:7d} time={elapsed:8.3f}s rel_err={rel:.3e} "
                f"({result.termination.value})",
                flush=True,
            )

    print("")
    for label, values in stats.items():
        print(
            f"{label:8s} mean iters={statistics.mean(values['iters']):10.1f}  "
            f"mean time={statistics.mean(values['time']):8.3f}s  "
            f"median rel_err={statistics.median(values['rel_err']):.3e}"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
