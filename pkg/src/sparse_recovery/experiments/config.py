"""
Module for loading experiment run files.

A run file is a JSON object validated into a frozen Pydantic model:

- experiment: the ExperimentSpec for `solve` and `sweep`
- sweep: optional axis + value list for `sweep`
- prox_check: optional settings for the prox-oracle comparison
- grad_check: optional settings for the finite-difference gradient check

Defaults reproduce the noise-free DCT study: lambda = 0.008, d = 1e7,
eta = 0.5, a = 1e-8, N = 4, rel_tol = 1e-8, max_iter = 500 n.
"""

import json
import math
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing_extensions import Self

from sparse_recovery.solvers.config import LambdaSchedule, SolverConfig, SolverVariant

# (F, D) -> lambda for noise-free runs; D = 5 depends on s
_NOISE_FREE_LAMBDA_BY_D = {1.0: 0.001, 3.0: 0.004}
_NOISE_FREE_LAMBDA_D5_SPARSITY = (2, 6, 10, 14, 18, 22)
_NOISE_FREE_LAMBDA_D5 = (0.004, 0.004, 0.1, 0.2, 0.5, 0.5)


def noise_free_lambda(F: float, D: float, s: int) -> float:
    """
    Tuned lambda for the noise-free oversampled-DCT study.

    D = 1 and D = 3 use one value for every F and s; D = 5 maps
    s in {2, 6, 10, 14, 18, 22} positionally onto its list. Anything else has
    no preset and raises ValueError.
    """
    if F <= 0:
        raise ValueError(f"F must be > 0, got {F}")
    D = float(D)
    if D in _NOISE_FREE_LAMBDA_BY_D:
        return _NOISE_FREE_LAMBDA_BY_D[D]
    if D == 5.0 and s in _NOISE_FREE_LAMBDA_D5_SPARSITY:
        return _NOISE_FREE_LAMBDA_D5[_NOISE_FREE_LAMBDA_D5_SPARSITY.index(s)]
    raise ValueError(f"No preset lambda for F={F}, D={D}, s={s}; set lambda0 explicitly")


class ZeroEps(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["zero"] = "zero"

    def value(self, m: int) -> float:
        return 0.0


class ScaledSqrtMEps(BaseModel):
    """eps = c * sqrt(m)."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["scaled_sqrt_m"] = "scaled_sqrt_m"
    c: float = Field(description="Scale on sqrt(m); 3e-3 for noisy DCT runs, 0.05 for Gaussian.")

    @model_validator(mode="after")
    def validate_scale(self) -> Self:
        if not math.isfinite(self.c) or self.c < 0:
            raise ValueError(f"c must be a finite number >= 0, got {self.c}")
        return self

    def value(self, m: int) -> float:
        return self.c * math.sqrt(m)


EpsRule = Annotated[Union[ZeroEps, ScaledSqrtMEps], Field(discriminator="kind")]


class AdmmSettings(BaseModel):
    """l1-ADMM warm start: weight * ||x||_1 + 1/2 ||Ax - b||^2 for `iters` sweeps."""

    model_config = ConfigDict(frozen=True)

    weight: float = Field(default=0.08, description="l1 weight of the warm-start problem.")
    iters: Optional[int] = Field(default=None, description="ADMM iterations; defaults to 2 n.")
    rho: float = Field(default=1.0, description="ADMM penalty parameter.")

    @model_validator(mode="after")
    def validate_admm(self) -> Self:
        if self.weight <= 0:
            raise ValueError(f"weight must be > 0, got {self.weight}")
        if self.rho <= 0:
            raise ValueError(f"rho must be > 0, got {self.rho}")
        if self.iters is not None and self.iters < 1:
            raise ValueError(f"iters must be >= 1, got {self.iters}")
        return self


class ExperimentSpec(BaseModel):
    """
    One batch of recovery trials. Every trial draws its own matrix, ground
    truth and noise from streams keyed by (seed, trial).
    """

    model_config = ConfigDict(frozen=True)

    matrix_family: Literal["gaussian", "oversampled_dct"] = Field(
        default="oversampled_dct", description="Sensing matrix generator."
    )
    m: int = Field(description="Number of measurements.")
    n: int = Field(description="Signal length.")
    s: int = Field(description="Number of nonzeros in the ground truth.")
    F: float = Field(default=1.0, description="DCT coherence factor; unused for Gaussian matrices.")
    D: float = Field(
        default=1.0,
        description="Dynamic-range exponent of DCT ground truths; ignored for Gaussian matrices.",
    )
    sigma: float = Field(default=0.0, description="Standard deviation of the measurement noise.")
    eps_rule: EpsRule = Field(default_factory=ZeroEps, description="How eps is set from m.")
    normalize_columns: bool = Field(
        default=False, description="Center and unit-normalize Gaussian columns."
    )
    trials: int = Field(default=1, description="Number of trials.")
    seed: int = Field(default=0, description="Root seed of all per-trial streams.")
    lambda0: Optional[float] = Field(
        default=0.008,
        description="Penalty weight, initial value under the schedule. null selects the preset.",
    )
    lambda_schedule_on: bool = Field(default=False, description="Enable lambda continuation.")
    lambda_schedule: LambdaSchedule = Field(default_factory=LambdaSchedule)
    solver: SolverVariant = Field(default=SolverVariant.PPGA_NL)
    d: float = Field(default=1e7, description="Radius of the ball constraint ||x||_2 <= d.")
    solver_config: SolverConfig = Field(default_factory=SolverConfig)
    admm: AdmmSettings = Field(default_factory=AdmmSettings)

    @model_validator(mode="after")
    def validate_dimensions(self) -> Self:
        if self.m < 1 or self.n < 1:
            raise ValueError(f"m and n must be >= 1, got m={self.m}, n={self.n}")
        if self.m > self.n:
            raise ValueError(f"m ({self.m}) must not exceed n ({self.n})")
        if not 1 <= self.s <= self.n:
            raise ValueError(f"s must lie in [1, n={self.n}], got {self.s}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")
        return self

    @model_validator(mode="after")
    def validate_model_constants(self) -> Self:
        if not math.isfinite(self.F) or self.F <= 0:
            raise ValueError(f"F must be > 0, got {self.F}")
        if not math.isfinite(self.D) or self.D < 0:
            raise ValueError(f"D must be >= 0, got {self.D}")
        if not math.isfinite(self.sigma) or self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if not math.isfinite(self.d) or self.d <= 0:
            raise ValueError(f"d must be > 0, got {self.d}")
        if self.lambda0 is not None and (not math.isfinite(self.lambda0) or self.lambda0 <= 0):
            raise ValueError(f"lambda0 must be > 0, got {self.lambda0}")
        if self.solver == SolverVariant.PPGA_NL and self.solver_config.window < 1:
            raise ValueError("PPGA_NL needs solver_config.window >= 1")
        # raises when there is no preset for this (F, D, s)
        self.resolved_lambda()
        return self

    def resolved_lambda(self) -> float:
        if self.lambda0 is not None:
            return self.lambda0
        return noise_free_lambda(self.F, self.D, self.s)

    def eps(self) -> float:
        return self.eps_rule.value(self.m)

    @property
    def noisy(self) -> bool:
        return self.sigma > 0

    def solver_settings(self) -> SolverConfig:
        """solver_config with the lambda schedule attached when enabled."""
        if not self.lambda_schedule_on:
            return self.solver_config
        return self.solver_config.model_copy(update={"lambda_schedule": self.lambda_schedule})

    def with_updates(self, **updates) -> "ExperimentSpec":
        """Re-validated copy with some fields replaced."""
        data = self.model_dump()
        data.update(updates)
        return ExperimentSpec.model_validate(data)


class SweepSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    axis: Literal["s", "F", "D", "m", "solver"] = Field(description="ExperimentSpec field to vary.")
    values: List[Union[float, str]] = Field(description="Grid values, run in the given order.")

    @model_validator(mode="after")
    def validate_values(self) -> Self:
        if not self.values:
            raise ValueError("values must not be empty")
        if self.axis != "solver" and any(isinstance(v, str) for v in self.values):
            raise ValueError(f"values for axis {self.axis} must be numbers")
        if self.axis in ("s", "m") and any(float(v) != int(v) for v in self.values):
            raise ValueError(f"values for axis {self.axis} must be integers")
        return self

    def grid(self, base: ExperimentSpec) -> List[ExperimentSpec]:
        specs = []
        for value in self.values:
            if self.axis in ("s", "m"):
                value = int(value)
            specs.append(base.with_updates(**{self.axis: value}))
        return specs


class ProxCheckSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    trials: int = Field(default=1000, description="Random (y, beta, gamma, d) draws.")
    seed: int = Field(default=0)
    tolerance: float = Field(default=1e-7, description="Allowed objective gap to the oracle.")
    grid: int = Field(default=400, description="Radius grid size of the oracle.")

    @model_validator(mode="after")
    def validate_check(self) -> Self:
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.grid < 200:
            raise ValueError(f"grid must be >= 200, got {self.grid}")
        if self.tolerance <= 0:
            raise ValueError(f"tolerance must be > 0, got {self.tolerance}")
        return self


class GradCheckSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    samples: int = Field(default=200, description="Random (A, b, eps, x) draws.")
    seed: int = Field(default=0)
    tolerance: float = Field(default=1e-5, description="Allowed relative gradient error.")
    step: float = Field(default=1e-6, description="Central-difference step.")
    boundary_gap: float = Field(
        default=1e-4, description="Skip points with | ||Ax - b|| - eps | below this."
    )
    max_dim: int = Field(default=20, description="Upper bound on m and n.")

    @model_validator(mode="after")
    def validate_check(self) -> Self:
        if self.samples < 1:
            raise ValueError(f"samples must be >= 1, got {self.samples}")
        if self.step <= 0 or self.tolerance <= 0 or self.boundary_gap < 0:
            raise ValueError("step and tolerance must be > 0, boundary_gap >= 0")
        if self.max_dim < 1:
            raise ValueError(f"max_dim must be >= 1, got {self.max_dim}")
        return self


class RunFile(BaseModel):
    model_config = ConfigDict(frozen=True)

    experiment: Optional[ExperimentSpec] = None
    sweep: Optional[SweepSpec] = None
    prox_check: ProxCheckSpec = Field(default_factory=ProxCheckSpec)
    grad_check: GradCheckSpec = Field(default_factory=GradCheckSpec)

    @model_validator(mode="after")
    def validate_sweep(self) -> Self:
        if self.sweep is not None:
            if self.experiment is None:
                raise ValueError("sweep requires an experiment section")
            # every grid point must be a valid spec before anything runs
            self.sweep.grid(self.experiment)
        return self


def load_config(config_filepath: Path) -> RunFile:
    """
    Loads the JSON run file and validates it.
    """
    with open(config_filepath, "r", encoding="utf-8") as f:
        try:
            config_json = json.load(f)
        except json.JSONDecodeError as e:
            raise ValueError(
                f"Tried to load {config_filepath} into JSON object and failed. "
                "Check to ensure the file provided is valid JSON."
            ) from e
    if not isinstance(config_json, dict):
        raise ValueError(f"Run file {config_filepath} must be a JSON object")
    return RunFile(**config_json)
