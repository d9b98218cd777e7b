"""
Runtime complexity certificates for restarted NCG runs.

Given a finished run, re-derives from its trace the per-iteration guarantees
of the modified restart framework (Armijo acceptance, the non-restarted
direction bounds, the sufficient decrease bounds and the backtracking bounds) and the
global iteration and evaluation bounds. A ``None`` count means the check is
not applicable to the run.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional

from ncg.core import RestartKind, RunResult, SolverConfig, WarmStart
from ncg.directions import length_threshold, norm_power, slope_threshold
from ncg.linesearch import armijo_satisfied

logger = logging.getLogger(__name__)

NOT_APPLICABLE = None
LOG_RATIO_MARGIN = 1e-9
WEAK_BOUND_FACTOR = 100.0

CERTIFIED_POLICIES = (RestartKind.MODIFIED, RestartKind.ALWAYS)


@dataclass
class CertificateReport:
    L_bound: Optional[float]
    f_low: Optional[float]
    armijo_violations: int
    direction_violations: Optional[int]
    decrease_violations: Optional[int]
    backtrack_bound_violations: Optional[int]
    c_N: Optional[float]
    c_R: Optional[float]
    K_epsilon: Optional[float]
    iterations_within_K_epsilon: Optional[bool]
    eval_bound: Optional[float]
    evals_within_bound: Optional[bool]
    N_count: int
    R_count: int
    K_epsilon_weak: Optional[bool] = None

    @property
    def total_violations(self) -> int:
        counts = (self.armijo_violations, self.direction_violations,
                  self.decrease_violations, self.backtrack_bound_violations)
        total = sum(count for count in counts if count is not None)
        if self.iterations_within_K_epsilon is False:
            total += 1
        if self.evals_within_bound is False:
            total += 1
        return total

    @property
    def passed(self) -> bool:
        return self.total_violations == 0

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["total_violations"] = self.total_violations
        data["passed"] = self.passed
        return data


def _log_theta(value: float, theta: float) -> float:
    return math.log(value) / math.log(theta)


def decrease_constants(config: SolverConfig, L_bound: float):
    """(c_N, c_R): guaranteed decrease per unit of gradient norm for non-restarted and restarted steps."""
    eta, theta, sigma, kappa = config.eta, config.theta, config.sigma, config.kappa
    c_N = eta * sigma * min(1.0, 2.0 * (1.0 - eta) * sigma * theta / (kappa ** 2 * L_bound))
    c_R = eta * min(1.0, 2.0 * (1.0 - eta) * theta / L_bound)
    return c_N, c_R


def restarted_backtrack_bound(config: SolverConfig, L_bound: float) -> int:
    j_bar = max(0.0, _log_theta(2.0 * (1.0 - config.eta) / L_bound, config.theta))
    return int(math.floor(j_bar + LOG_RATIO_MARGIN)) + 1


def conjugate_backtrack_bound(config: SolverConfig, L_bound: float, grad_norm: float) -> int:
    scaled = norm_power(grad_norm, 1.0 + config.p - 2.0 * config.q)
    j_bar = max(0.0, _log_theta(2.0 * (1.0 - config.eta) * config.sigma * scaled
                                / (config.kappa ** 2 * L_bound), config.theta))
    return int(math.floor(j_bar + 1.0 + LOG_RATIO_MARGIN))


def iteration_bound(config: SolverConfig, c_N: float, c_R: float, gap: float, epsilon: float) -> float:
    """K_eps: iterations needed before some gradient norm drops to epsilon."""
    bound = gap / c_R * epsilon ** -2.0
    if config.restart_policy is not RestartKind.ALWAYS:
        exponent = max(1.0 + config.p, 2.0 * (1.0 + config.p - config.q))
        bound += gap / c_N * epsilon ** -exponent
    return float(math.floor(bound))


def evaluation_bound(config: SolverConfig, L_bound: float, K_epsilon: float) -> float:
    j_bar = max(0.0, _log_theta(2.0 * (1.0 - config.eta) * config.sigma
                                / (config.kappa ** 2 * L_bound), config.theta))
    per_iteration = math.floor(j_bar + 1.0 + LOG_RATIO_MARGIN) + 1
    return per_iteration * K_epsilon


def certificate_check(result: RunResult, config: SolverConfig, L_bound: Optional[float] = None,
                      f_low: Optional[float] = None) -> CertificateReport:
    """
    Audit a run against the decrease and complexity guarantees.

    The Armijo check always applies. The direction bounds apply to the MODIFIED
    and ALWAYS policies; everything that depends on L additionally needs unit
    initial steps, where alpha_k = theta^j_k.
    """
    config.validate(certify=True)
    trace = result.trace
    f_values = result.f_values()
    policy_certified = config.restart_policy in CERTIFIED_POLICIES
    bound_checks = policy_certified and L_bound is not None and config.warm_start is WarmStart.UNIT
    if L_bound is not None and not L_bound > 0.0:
        logger.warning(f"Ignoring non-positive Lipschitz bound {L_bound}")
        bound_checks = False

    c_N = c_R = None
    j_restarted = None
    if bound_checks:
        c_N, c_R = decrease_constants(config, L_bound)
        j_restarted = restarted_backtrack_bound(config, L_bound)

    armijo_violations = 0
    direction_violations = 0 if policy_certified else NOT_APPLICABLE
    decrease_violations = 0 if bound_checks else NOT_APPLICABLE
    backtrack_violations = 0 if bound_checks else NOT_APPLICABLE
    n_count = 0

    for record, f_next in zip(trace, f_values[1:]):
        if not armijo_satisfied(record.f, f_next, record.alpha, record.directional_derivative, config.eta):
            armijo_violations += 1
        decrease = record.f - f_next

        if record.restarted:
            if bound_checks:
                if not decrease > c_R * record.grad_norm ** 2:
                    decrease_violations += 1
                if record.backtracks > j_restarted:
                    backtrack_violations += 1
            continue

        n_count += 1
        if policy_certified and (
                record.directional_derivative >= slope_threshold(record.grad_norm, config.sigma, config.p)
                or record.direction_norm >= length_threshold(record.grad_norm, config.kappa, config.q)):
            direction_violations += 1
        if bound_checks:
            g = record.grad_norm
            required = c_N * min(norm_power(g, 1.0 + config.p),
                                 norm_power(g, 2.0 * (1.0 + config.p - config.q)))
            if not decrease > required:
                decrease_violations += 1
            if record.backtracks > conjugate_backtrack_bound(config, L_bound, g):
                backtrack_violations += 1

    K = len(trace)
    K_epsilon = within_K = weak = None
    eval_bound = within_evals = None
    if bound_checks and f_low is not None:
        f0 = f_values[0] if f_values else result.final_f
        gap = max(0.0, f0 - f_low)
        epsilon = config.tolerance(result.initial_grad_norm)
        K_epsilon = iteration_bound(config, c_N, c_R, gap, epsilon)
        within_K = K <= K_epsilon
        weak = K_epsilon > WEAK_BOUND_FACTOR * max(K, 1)
        if config.evaluation_bound_applies:
            # bounds the line-search trials sum_k (j_k + 1); the start-point evaluation is not included
            eval_bound = evaluation_bound(config, L_bound, K_epsilon)
            within_evals = sum(record.backtracks + 1 for record in trace) <= eval_bound

    report = CertificateReport(
        L_bound=L_bound, f_low=f_low,
        armijo_violations=armijo_violations,
        direction_violations=direction_violations,
        decrease_violations=decrease_violations,
        backtrack_bound_violations=backtrack_violations,
        c_N=c_N, c_R=c_R,
        K_epsilon=K_epsilon, iterations_within_K_epsilon=within_K,
        eval_bound=eval_bound, evals_within_bound=within_evals,
        N_count=n_count, R_count=K - n_count,
        K_epsilon_weak=weak,
    )
    if not report.passed:
        logger.warning(f"{result.solver}: {report.total_violations} certificate violation(s) "
                       f"(armijo={armijo_violations}, direction={direction_violations}, "
                       f"decrease={decrease_violations}, backtracks={backtrack_violations}, "
                       f"K<=K_eps={within_K}, evals={within_evals})")
    return report
