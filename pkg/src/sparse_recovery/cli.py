"""
Command-line front end: run recovery batches and sweeps from a JSON run file,
and run the prox / gradient self-checks.

Examples:
  sparse-recovery solve --config ./dct_noise_free.json --out ./results --threads 4 --trace
  sparse-recovery sweep --config ./dct_sparsity_sweep.json --out ./results
  sparse-recovery prox-check
  sparse-recovery grad-check --seed 7

Exit codes: 0 success, 1 check failure, 2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional

from pydantic import ValidationError

from data_export.exporter import export_to_csv, export_to_json
from sparse_recovery.checks import run_grad_check, run_prox_check
from sparse_recovery.experiments.config import ExperimentSpec, RunFile, load_config
from sparse_recovery.experiments.runner import (
    TRACE_COLUMNS,
    TRIAL_COLUMNS,
    records_frame,
    run_experiment,
    run_sweep,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_IO_ERROR = 3


class ConfigError(ValueError):
    pass


def _format_validation_error(error: ValidationError) -> str:
    lines = []
    for item in error.errors():
        loc = ".".join(str(part) for part in item["loc"]) or "<root>"
        lines.append(f"{loc}: {item['msg']}")
    return "\n".join(lines)


def _load_run_file(path: Optional[Path]) -> RunFile:
    if path is None:
        return RunFile()
    if not path.is_file():
        raise ConfigError(f"Config file not found: {path}")
    try:
        return load_config(path)
    except ValidationError as e:
        raise ConfigError(_format_validation_error(e)) from e
    except (ValueError, OSError) as e:
        raise ConfigError(str(e)) from e


def _experiment(run_file: RunFile) -> ExperimentSpec:
    if run_file.experiment is None:
        raise ConfigError("experiment: section is required for this command")
    return run_file.experiment


def _with_seed(run_file: RunFile, seed: Optional[int]) -> RunFile:
    if seed is None:
        return run_file
    try:
        data = run_file.model_dump()
        if data.get("experiment") is not None:
            data["experiment"]["seed"] = seed
        data["prox_check"]["seed"] = seed
        data["grad_check"]["seed"] = seed
        return RunFile.model_validate(data)
    except ValidationError as e:
        raise ConfigError(_format_validation_error(e)) from e


def cmd_solve(run_file: RunFile, out_dir: Path, threads: int, trace: bool) -> int:
    spec = _experiment(run_file)
    result = run_experiment(spec, threads=threads, keep_traces=trace)
    out_dir.mkdir(parents=True, exist_ok=True)
    export_to_csv(records_frame(result.records), out_dir / "trials.csv", columns=TRIAL_COLUMNS)
    export_to_json(result.summary, out_dir / "summary.json")
    if trace:
        for record in result.records:
            if record.trace is not None:
                export_to_csv(
                    record.trace, out_dir / f"trace_{record.trial_index}.csv", columns=TRACE_COLUMNS
                )
    logger.info(
        "Wrote %s trials to %s (success rate %.3f)",
        len(result.records),
        out_dir,
        result.summary["success_rate"],
    )
    return EXIT_OK


def cmd_sweep(run_file: RunFile, out_dir: Path, threads: int) -> int:
    if run_file.sweep is None:
        raise ConfigError("sweep: section is required for the sweep command")
    _experiment(run_file)
    table = run_sweep(run_file, threads=threads)
    out_dir.mkdir(parents=True, exist_ok=True)
    export_to_csv(table, out_dir / "sweep.csv")
    logger.info("Wrote %s sweep rows to %s", len(table), out_dir)
    return EXIT_OK


def cmd_prox_check(run_file: RunFile) -> int:
    report = run_prox_check(run_file.prox_check)
    print(f"prox-check: trials={report.trials} max_gap={report.max_gap:.17g}")
    if not report.passed:
        print(f"prox-check FAILED (tolerance {report.tolerance:g}): {report.worst_case()}")
        return EXIT_CHECK_FAILED
    return EXIT_OK


def cmd_grad_check(run_file: RunFile) -> int:
    report = run_grad_check(run_file.grad_check)
    print(
        f"grad-check: samples={report.samples} skipped={report.skipped} "
        f"max_rel_err={report.max_rel_err:.17g}"
    )
    if not report.passed:
        print(f"grad-check FAILED (tolerance {report.tolerance:g}): {report.worst_case}")
        return EXIT_CHECK_FAILED
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparse-recovery",
        description="Sparse recovery with the smoothed l1/l2 penalty model.",
    )
    common = argparse.ArgumentParser(add_help=False)
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Warnings and errors only")
    common.add_argument("--config", type=Path, default=None, help="Path to JSON run file")
    common.add_argument(
        "--seed", type=int, default=None, help="Override every seed in the run file"
    )

    batch = argparse.ArgumentParser(add_help=False)
    batch.add_argument("--out", type=Path, required=True, help="Output directory")
    batch.add_argument(
        "--threads", type=int, default=1, help="Worker processes across trials (default 1)"
    )

    sub = parser.add_subparsers(dest="command", required=True)
    solve = sub.add_parser("solve", parents=[common, batch], help="Run one experiment")
    solve.add_argument("--trace", action="store_true", help="Write trace_<trial>.csv files")
    sub.add_parser("sweep", parents=[common, batch], help="Run an experiment per grid value")
    sub.add_parser("prox-check", parents=[common], help="Compare prox_rho with the oracle")
    sub.add_parser("grad-check", parents=[common], help="Finite-difference gradient check")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be >= 1")
    if args.seed is not None and args.seed < 0:
        parser.error("--seed must be >= 0")
    if args.command in ("solve", "sweep") and args.config is None:
        parser.error(f"--config is required for {args.command}")

    try:
        run_file = _with_seed(_load_run_file(args.config), args.seed)
        if args.command == "solve":
            return cmd_solve(run_file, args.out, args.threads, args.trace)
        if args.command == "sweep":
            return cmd_sweep(run_file, args.out, args.threads)
        if args.command == "prox-check":
            return cmd_prox_check(run_file)
        return cmd_grad_check(run_file)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        logger.error("Configuration error")
        return EXIT_CONFIG_ERROR
    except OSError as exc:
        logger.error("%s", exc, exc_info=True)
        return EXIT_IO_ERROR
    except Exception as exc:
        logger.exception("Internal error in %s: %s", args.command, exc)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED


if __name__ == "__main__":
    raise SystemExit(main())
