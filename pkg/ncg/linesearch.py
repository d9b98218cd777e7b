"""Armijo backtracking line search with a configurable initial step."""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ncg.core import ConfigurationError, LineSearchError, Objective, Vector, WarmStart

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LineSearchOutcome:
    alpha: float
    backtracks: int
    x_new: Vector
    f_new: float
    n_evals: int


def armijo_satisfied(f_x: float, f_trial: float, alpha: float, slope: float, eta: float) -> bool:
    """Strict sufficient decrease f(x + alpha d) < f(x) + eta alpha g^T d."""
    return f_trial < f_x + eta * alpha * slope


def armijo_backtrack(obj: Objective, x: Vector, f_x: float, g: Vector, d: Vector,
                     eta: float, theta: float, alpha_init: float,
                     max_backtracks: int) -> LineSearchOutcome:
    """
    First step in alpha_init * theta^j, j = 0, 1, ..., that passes the strict Armijo test.

    Raises:
        LineSearchError: d is not a descent direction, or no step was accepted
            after ``max_backtracks`` reductions.
    """
    if not 0.0 < eta < 1.0 or not 0.0 < theta < 1.0:
        raise ConfigurationError(f"Line search needs eta, theta in (0,1), got eta={eta}, theta={theta}")
    if not alpha_init > 0.0:
        raise ConfigurationError(f"Initial step must be positive, got {alpha_init}")

    slope = float(np.dot(g, d))
    if not slope < 0.0:
        raise LineSearchError(f"Direction is not a descent direction (g^T d = {slope:g})")

    for j in range(max_backtracks + 1):
        alpha = alpha_init * theta ** j
        x_trial = x + alpha * d
        f_trial = obj.value(x_trial)
        if armijo_satisfied(f_x, f_trial, alpha, slope, eta):
            return LineSearchOutcome(alpha=alpha, backtracks=j, x_new=x_trial,
                                     f_new=f_trial, n_evals=j + 1)

    raise LineSearchError(
        f"No Armijo step after {max_backtracks} backtracks from alpha={alpha_init:g} "
        f"(f={f_x:g}, g^T d={slope:g})")


def initial_step(policy: WarmStart, alpha_prev: Optional[float], length_ratio: float = 1.0) -> float:
    """
    Trial step of the next line search.

    Under DOUBLE_PREVIOUS the estimate is 2 alpha_prev, raised to
    2 alpha_prev * length_ratio when ``length_ratio`` = ||d_prev|| / ||d_k|| exceeds 1.
    The solver passes that ratio only on a restart that follows a conjugate step.
    """
    if policy is WarmStart.DOUBLE_PREVIOUS and alpha_prev is not None:
        return 2.0 * alpha_prev * max(1.0, length_ratio)
    return 1.0
