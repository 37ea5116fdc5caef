"""
Proximity operators used by the proximal-gradient solvers.

    rho_gamma(x) = ||x||_1 - gamma * ||x||_2 + indicator(||x||_2 <= d)

prox_rho evaluates prox of beta * rho_gamma in closed form. prox_oracle solves the
same problem by search and exists to check prox_rho on small inputs.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .linalg import DimensionError, Vector, as_vector

logger = logging.getLogger(__name__)

ORACLE_MAX_DIM = 4
ORACLE_MIN_GRID = 200


class ProxCase(str, Enum):
    I = "I"
    II = "II"
    III = "III"
    IV = "IV"


@dataclass(frozen=True)
class ProxParams:
    """beta = alpha * lambda, gamma = C / lambda, d = ball radius."""

    beta: float
    gamma: float
    d: float

    def __post_init__(self) -> None:
        for name in ("beta", "gamma", "d"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be a finite number > 0, got {value}")


@dataclass(frozen=True, eq=False)
class ProxSelection:
    case_id: ProxCase
    selected_index: Optional[int]
    result: Vector


def soft_threshold(y: Vector, alpha: float) -> Vector:
    """Componentwise sign(y_i) * max(|y_i| - alpha, 0)."""
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    y = np.asarray(y, dtype=np.float64)
    return np.sign(y) * np.maximum(np.abs(y) - alpha, 0.0)


def prox_objective(x: Vector, y: Vector, p: ProxParams) -> float:
    """||x||_1 - gamma ||x||_2 + ||x - y||^2 / (2 beta); +inf outside the ball."""
    x = np.asarray(x, dtype=np.float64)
    norm2 = float(np.linalg.norm(x))
    if norm2 > p.d * (1.0 + 1e-12):
        return float("inf")
    diff = x - np.asarray(y, dtype=np.float64)
    return float(np.abs(x).sum()) - p.gamma * norm2 + float(diff @ diff) / (2.0 * p.beta)


def _one_sparse(n: int, index: int, magnitude: float, sign: float) -> Vector:
    out = np.zeros(n)
    out[index] = sign * magnitude
    return out


def prox_rho(y: Vector, p: ProxParams) -> ProxSelection:
    """
    prox of beta * rho_gamma at y.

    Branches are tested in the order IV, I, II, III. Set-valued branches return
    the sign-matching representative on the lowest index of max |y_i|.
    """
    y = as_vector(y, name="y")
    n = y.shape[0]
    abs_y = np.abs(y)
    y_inf = float(abs_y.max())
    beta, gamma, d = p.beta, p.gamma, p.d

    if y_inf <= (1.0 - gamma) * beta:
        return ProxSelection(ProxCase.IV, None, np.zeros(n))

    if y_inf > beta:
        z = soft_threshold(y, beta)
        z_norm = float(np.linalg.norm(z))
        if z_norm <= d - beta * gamma:
            x = z * ((z_norm + beta * gamma) / z_norm)
        else:
            x = z * (d / z_norm)
        return ProxSelection(ProxCase.I, None, x)

    index = int(np.argmax(abs_y))
    sign = -1.0 if y[index] < 0 else 1.0
    if y_inf == beta:
        magnitude = min(beta * gamma, d)
        return ProxSelection(ProxCase.II, index, _one_sparse(n, index, magnitude, sign))

    magnitude = min(y_inf + (gamma - 1.0) * beta, d)
    return ProxSelection(ProxCase.III, index, _one_sparse(n, index, magnitude, sign))


def _pattern_slope(c: Vector, support: tuple[int, ...]) -> tuple[float, Vector]:
    """
    Minimum of sum(u_i c_i) over u >= 0, ||u||_2 = 1, supp(u) in support, with its minimizer.
    """
    c_s = c[list(support)]
    negative = np.minimum(c_s, 0.0)
    neg_norm = float(np.linalg.norm(negative))
    u = np.zeros(c.shape[0])
    if neg_norm > 0.0:
        u[list(support)] = -negative / neg_norm
        return -neg_norm, u
    pick = support[int(np.argmin(c_s))]
    u[pick] = 1.0
    return float(c[pick]), u


def prox_oracle(y: Vector, p: ProxParams, grid: int = 400) -> Vector:
    """
    Global minimizer of ||x||_1 - gamma ||x||_2 + ||x - y||^2 / (2 beta) over ||x||_2 <= d.

    Minimizers agree in sign with y, so x = sign(y) * u with u >= 0. For each
    support pattern and fixed norm r the best direction u is explicit, which
    leaves a 1-D problem in r on [0, d]. That is scanned on a grid and polished
    by bounded golden-section search. Only for n <= 4.
    """
    y = as_vector(y, name="y")
    n = y.shape[0]
    if n > ORACLE_MAX_DIM:
        raise DimensionError(f"prox_oracle supports at most {ORACLE_MAX_DIM} entries, got {n}")
    if grid < ORACLE_MIN_GRID:
        raise ValueError(f"grid must be >= {ORACLE_MIN_GRID}, got {grid}")

    signs = np.where(y < 0, -1.0, 1.0)
    c = 1.0 - np.abs(y) / p.beta
    y_sq = float(y @ y)

    best_x = np.zeros(n)
    best_value = prox_objective(best_x, y, p)
    radii = np.linspace(0.0, p.d, grid + 1)

    for size in range(1, n + 1):
        for support in itertools.combinations(range(n), size):
            slope, direction = _pattern_slope(c, support)

            def phi(r: float, slope: float = slope) -> float:
                return -p.gamma * r + (r * r + y_sq) / (2.0 * p.beta) + r * slope

            values = -p.gamma * radii + (radii**2 + y_sq) / (2.0 * p.beta) + radii * slope
            k = int(np.argmin(values))
            lo = radii[max(k - 1, 0)]
            hi = radii[min(k + 1, grid)]
            candidates = [radii[k], 0.0, p.d]
            if hi > lo:
                polished = minimize_scalar(
                    phi, bounds=(lo, hi), method="bounded", options={"xatol": 1e-13}
                )
                candidates.append(float(polished.x))
            r_best = min(candidates, key=phi)

            x = signs * direction * r_best
            value = prox_objective(x, y, p)
            if value < best_value:
                best_value = value
                best_x = x

    return best_x
