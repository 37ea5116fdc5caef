"""
Instance generators, recovery metrics and the trial runner.
"""

from .config import (
    ExperimentSpec,
    GradCheckSpec,
    ProxCheckSpec,
    RunFile,
    SweepSpec,
    load_config,
    noise_free_lambda,
)
from .generators import (
    gen_dct_matrix,
    gen_gaussian_matrix,
    gen_ground_truth,
    make_instance,
    trial_rng,
)
from .metrics import (
    OracleMSEError,
    dynamic_range,
    metric_mse,
    metric_oracle_mse,
    metric_ree_err,
    metric_rel_err,
    mutual_coherence,
)
from .runner import ExperimentResult, TrialRecord, run_experiment, run_sweep, run_trial

__all__ = [
    "ExperimentSpec",
    "GradCheckSpec",
    "ProxCheckSpec",
    "RunFile",
    "SweepSpec",
    "load_config",
    "noise_free_lambda",
    "gen_dct_matrix",
    "gen_gaussian_matrix",
    "gen_ground_truth",
    "make_instance",
    "trial_rng",
    "OracleMSEError",
    "dynamic_range",
    "metric_mse",
    "metric_oracle_mse",
    "metric_ree_err",
    "metric_rel_err",
    "mutual_coherence",
    "ExperimentResult",
    "TrialRecord",
    "run_experiment",
    "run_sweep",
    "run_trial",
]
