"""
Solver configuration models.

When alpha_lo / alpha_hi are left unset they are derived from the Lipschitz
constant L of the objective at solve time (see resolve_step_bounds).
"""

from enum import Enum
from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing_extensions import Self


class SolverVariant(str, Enum):
    PPGA = "PPGA"
    PPGA_ML = "PPGA_ML"
    PPGA_NL = "PPGA_NL"


# fixed-step PPGA uses alpha = PPGA_STEP_FRACTION / L
PPGA_STEP_FRACTION = 0.999
LS_ALPHA_HI_SCALE = 10.0
LS_ALPHA_LO_SCALE = 1e-8


class LambdaSchedule(BaseModel):
    """
    Continuation on lambda: multiply by ``factor`` every ``every`` iterations and
    keep the value reached once ``freeze_after`` iterations have run.
    """

    model_config = ConfigDict(frozen=True)

    factor: float = Field(
        default=0.5, description="Multiplier applied at each reduction, in (0, 1]."
    )
    every: int = Field(default=10, description="Iterations between reductions.")
    freeze_after: int = Field(
        default=500, description="Iteration count after which lambda is fixed."
    )

    @model_validator(mode="after")
    def validate_schedule(self) -> Self:
        if not 0.0 < self.factor <= 1.0:
            raise ValueError(f"factor must lie in (0, 1], got {self.factor}")
        if self.every < 1:
            raise ValueError(f"every must be >= 1, got {self.every}")
        if self.freeze_after < 0:
            raise ValueError(f"freeze_after must be >= 0, got {self.freeze_after}")
        return self

    def lambda_at(self, lambda0: float, iteration: int) -> float:
        """lambda used at 0-based outer iteration ``iteration``."""
        reductions = min(iteration, self.freeze_after) // self.every
        return lambda0 * self.factor**reductions


class SolverConfig(BaseModel):
    """
    Step-size bounds, line-search constants and stopping rule shared by all variants.
    """

    model_config = ConfigDict(frozen=True)

    alpha_lo: Optional[float] = Field(
        default=None,
        description="Lower clamp of the trial step; 1e-8 / L by default with line search.",
    )
    alpha_hi: Optional[float] = Field(
        default=None,
        description=(
            "Upper clamp of the trial step (line-search variants, default 10 / L) or the "
            "fixed step of PPGA (default 0.999 / L, must stay below 1 / L)."
        ),
    )
    eta: float = Field(default=0.5, description="Backtracking factor, in (0, 1).")
    a: float = Field(default=1e-8, description="Sufficient-decrease weight, >= 0.")
    window: int = Field(
        default=4,
        description="Nonmonotone memory N. PPGA_ML always runs with N = 0.",
    )
    rel_tol: float = Field(default=1e-8, description="Stop when ||x+ - x|| / ||x|| <= rel_tol.")
    max_iter: Optional[int] = Field(
        default=None, description="Iteration cap. Defaults to 500 * n."
    )
    lambda_schedule: Optional[LambdaSchedule] = Field(
        default=None, description="Optional lambda continuation; off when absent."
    )
    backtrack_cap: int = Field(
        default=100, description="Hard cap on backtracking reductions per iteration."
    )

    @model_validator(mode="after")
    def validate_constants(self) -> Self:
        if not 0.0 < self.eta < 1.0:
            raise ValueError(f"eta must lie strictly between 0 and 1, got {self.eta}")
        if self.a < 0.0:
            raise ValueError(f"a must be >= 0, got {self.a}")
        if self.window < 0:
            raise ValueError(f"window must be >= 0, got {self.window}")
        if self.rel_tol < 0.0:
            raise ValueError(f"rel_tol must be >= 0, got {self.rel_tol}")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.backtrack_cap < 0:
            raise ValueError(f"backtrack_cap must be >= 0, got {self.backtrack_cap}")
        for name in ("alpha_lo", "alpha_hi"):
            value = getattr(self, name)
            if value is not None and value <= 0.0:
                raise ValueError(f"{name} must be > 0, got {value}")
        if (
            self.alpha_lo is not None
            and self.alpha_hi is not None
            and self.alpha_lo > self.alpha_hi
        ):
            raise ValueError(
                f"alpha_lo ({self.alpha_lo}) must not exceed alpha_hi ({self.alpha_hi})"
            )
        return self

    def iteration_cap(self, n: int) -> int:
        return self.max_iter if self.max_iter is not None else 500 * n


def resolve_step_bounds(
    cfg: SolverConfig, lipschitz: float, variant: SolverVariant
) -> Tuple[float, float]:
    """
    Concrete (alpha_lo, alpha_hi) for a solve against an objective with constant L.

    For PPGA both entries equal the fixed step, which must be below 1 / L.
    """
    if variant == SolverVariant.PPGA:
        alpha = cfg.alpha_hi if cfg.alpha_hi is not None else PPGA_STEP_FRACTION / lipschitz
        if alpha * lipschitz >= 1.0:
            raise ValueError(
                f"PPGA needs a step below 1/L = {1.0 / lipschitz:.6e}, got alpha_hi = {alpha:.6e}"
            )
        return alpha, alpha

    alpha_hi = cfg.alpha_hi if cfg.alpha_hi is not None else LS_ALPHA_HI_SCALE / lipschitz
    alpha_lo = cfg.alpha_lo if cfg.alpha_lo is not None else LS_ALPHA_LO_SCALE / lipschitz
    if alpha_lo > alpha_hi:
        raise ValueError(
            f"alpha_lo ({alpha_lo:.6e}) exceeds alpha_hi ({alpha_hi:.6e}) for L = {lipschitz:.6e}"
        )
    return alpha_lo, alpha_hi
