"""
Conjugate parameter formulas, the direction recurrence and restart policies.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ncg.core import (BetaFormula, DegenerateDirectionError, RestartKind, SolverConfig,
                      Vector)

logger = logging.getLogger(__name__)

HZ_DENOMINATOR_FLOOR = 1e-300


@dataclass(frozen=True)
class RestartPolicy:
    kind: RestartKind
    sigma: float = 0.01
    kappa: float = 100.0
    p: float = 0.5
    q: float = 0.75
    sigma_orth: float = 0.01

    @classmethod
    def from_config(cls, config: SolverConfig) -> "RestartPolicy":
        return cls(kind=config.restart_policy, sigma=config.sigma, kappa=config.kappa,
                   p=config.p, q=config.q, sigma_orth=config.sigma_orth)


@dataclass(frozen=True, eq=False)
class DirectionState:
    g_old: Vector
    g_new: Vector
    d_old: Vector
    d_new: Vector
    beta: float
    restarted: bool
    beta_proposed: float = 0.0

    @property
    def y(self) -> Vector:
        return self.g_new - self.g_old


def norm_power(norm: float, exponent: float) -> float:
    """norm**exponent through exp/log, 0 for a zero norm."""
    if norm <= 0.0:
        return 0.0
    return math.exp(exponent * math.log(norm))


def slope_threshold(grad_norm: float, sigma: float, p: float) -> float:
    return -sigma * norm_power(grad_norm, 1.0 + p)


def length_threshold(grad_norm: float, kappa: float, q: float) -> float:
    return kappa * norm_power(grad_norm, q)


def compute_beta(formula: BetaFormula, g_new: Vector, g_old: Vector, d_old: Vector) -> float:
    if formula is BetaFormula.HZ:
        y = g_new - g_old
        dy = float(np.dot(d_old, y))
        floor = HZ_DENOMINATOR_FLOOR * max(1.0, float(np.linalg.norm(d_old) * np.linalg.norm(y)))
        if abs(dy) < floor or dy == 0.0:
            raise DegenerateDirectionError(f"HZ denominator d^T y = {dy:g} is degenerate")
        return float(np.dot(y - 2.0 * d_old * (float(np.dot(y, y)) / dy), g_new) / dy)

    old_sq = float(np.dot(g_old, g_old))
    if old_sq == 0.0:
        raise DegenerateDirectionError("Previous gradient is zero")
    if formula is BetaFormula.FR:
        return float(np.dot(g_new, g_new)) / old_sq

    pr = float(np.dot(g_new, g_new - g_old)) / old_sq
    if formula is BetaFormula.PRP_PLUS:
        return max(pr, 0.0)
    return pr


def propose_direction(g_new: Vector, beta: float, d_old: Vector) -> Vector:
    return -g_new + beta * d_old


def restart_test(policy: RestartPolicy, g_new: Vector, d_new: Vector, g_old: Vector) -> bool:
    if policy.kind is RestartKind.ALWAYS:
        return True
    if policy.kind is RestartKind.STANDARD:
        return float(np.dot(g_new, d_new)) >= 0.0
    if policy.kind is RestartKind.ORTHOGONALITY:
        return abs(float(np.dot(g_old, g_new))) >= policy.sigma_orth * float(np.dot(g_old, g_old))

    grad_norm = float(np.linalg.norm(g_new))
    return (float(np.dot(g_new, d_new)) >= slope_threshold(grad_norm, policy.sigma, policy.p)
            or float(np.linalg.norm(d_new)) >= length_threshold(grad_norm, policy.kappa, policy.q))


def next_direction(policy: RestartPolicy, formula: BetaFormula, g_new: Vector, g_old: Vector,
                   d_old: Vector, k: Optional[int] = None) -> DirectionState:
    """
    d_{k+1} from the recurrence, replaced by -g_{k+1} when the policy's restart
    test fires, when the formula is degenerate, or when the proposal is not a
    descent direction.
    """
    if policy.kind is RestartKind.ALWAYS:
        return DirectionState(g_old, g_new, d_old, -g_new, 0.0, True)

    try:
        beta = compute_beta(formula, g_new, g_old, d_old)
    except DegenerateDirectionError as e:
        logger.debug(f"Iteration {k}: {e}; restarting")
        return DirectionState(g_old, g_new, d_old, -g_new, 0.0, True)

    proposal = propose_direction(g_new, beta, d_old)
    restart = restart_test(policy, g_new, proposal, g_old)
    if not restart and not float(np.dot(g_new, proposal)) < 0.0:
        logger.debug(f"Iteration {k}: proposal is not a descent direction; restarting")
        restart = True

    if restart:
        return DirectionState(g_old, g_new, d_old, -g_new, 0.0, True, beta_proposed=beta)
    return DirectionState(g_old, g_new, d_old, proposal, beta, False, beta_proposed=beta)
