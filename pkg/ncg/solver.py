"""
Algorithm-1 driver (nonlinear conjugate gradient with restarts) and the
gradient-descent baselines.

Every runner returns a ``RunResult``; numerical failures end the run with
status LINESEARCH_FAILED and keep the partial trace.
"""

import logging
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike

from ncg.core import (DimensionError, IterationRecord, LineSearchError, NumericalBreakdownError,
                      Objective, RestartKind, RunResult, RunStatus, SolverConfig, Vector)
from ncg.directions import RestartPolicy, next_direction
from ncg.linesearch import armijo_backtrack, initial_step

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["k", "f", "grad_norm", "alpha", "backtracks", "restarted", "beta", "gTd"]
SEMI_ADAPTIVE_L0 = 1.0
SEMI_ADAPTIVE_L_FLOOR = 1e-12


class _RunState:
    """Mutable bookkeeping shared by the runners; converted to a RunResult at the end."""

    def __init__(self, obj: Objective, x0: ArrayLike, solver: str):
        x = np.array(x0, dtype=np.float64)
        if x.shape != (obj.n,):
            raise DimensionError(f"Starting point has shape {x.shape}, expected ({obj.n},)")
        self.obj = obj
        self.solver = solver
        self.start_f = obj.n_f
        self.start_g = obj.n_g
        self.x = x
        self.f = float("nan")
        self.g: Optional[Vector] = None
        self.grad_norm = float("nan")
        self.initial_grad_norm = float("nan")
        self.trace: List[IterationRecord] = []
        self.status = RunStatus.BUDGET_EXHAUSTED
        self.message = ""

    def start(self, config: SolverConfig) -> float:
        """Evaluate g_0 and f_0; returns the stopping threshold."""
        self.set_gradient(self.obj.gradient(self.x))
        self.initial_grad_norm = self.grad_norm
        self.f = self.obj.value(self.x)
        return config.tolerance(self.initial_grad_norm)

    def set_gradient(self, g: Vector) -> None:
        self.g = g
        self.grad_norm = float(np.linalg.norm(g))

    def fail(self, error: Exception) -> None:
        self.status = RunStatus.LINESEARCH_FAILED
        self.message = str(error)
        logger.debug(f"{self.solver} on {self.obj.name} failed after {len(self.trace)} iterations: {error}")

    def result(self) -> RunResult:
        result = RunResult(
            status=self.status,
            iterations=len(self.trace),
            n_f=self.obj.n_f - self.start_f,
            n_g=self.obj.n_g - self.start_g,
            final_grad_norm=self.grad_norm,
            final_f=self.f,
            trace=self.trace,
            x_final=self.x,
            initial_grad_norm=self.initial_grad_norm,
            solver=self.solver,
            message=self.message,
        )
        logger.debug(f"{self.solver} on {self.obj.name}: {result.status.value} after "
                     f"{result.iterations} iterations, n_f={result.n_f}, ||g||={result.final_grad_norm:.3e}")
        return result


def run_restarted_ncg(obj: Objective, x0: ArrayLike, config: SolverConfig,
                      solver: str = "RestartedNCG") -> RunResult:
    config.validate()
    policy = RestartPolicy.from_config(config)
    state = _RunState(obj, x0, solver)

    try:
        tolerance = state.start(config)
        if state.grad_norm <= tolerance:
            state.status = RunStatus.CONVERGED
            return state.result()

        d = -state.g
        restarted, beta, beta_proposed = True, 0.0, 0.0
        alpha_prev = None
        prev_norm, prev_restarted = 0.0, True

        for k in range(config.max_iterations):
            slope = float(np.dot(state.g, d))
            d_norm = float(np.linalg.norm(d))
            length_ratio = prev_norm / d_norm if restarted and not prev_restarted else 1.0
            outcome = armijo_backtrack(obj, state.x, state.f, state.g, d, config.eta, config.theta,
                                       initial_step(config.warm_start, alpha_prev, length_ratio),
                                       config.max_backtracks)
            state.trace.append(IterationRecord(
                k=k, f=state.f, grad_norm=state.grad_norm, alpha=outcome.alpha,
                backtracks=outcome.backtracks, restarted=restarted, beta=beta,
                directional_derivative=slope, direction_norm=d_norm,
                beta_proposed=beta_proposed,
            ))
            state.x, state.f, alpha_prev = outcome.x_new, outcome.f_new, outcome.alpha
            prev_norm, prev_restarted = d_norm, restarted

            g_old = state.g
            state.set_gradient(obj.gradient(state.x))
            if state.grad_norm <= tolerance:
                state.status = RunStatus.CONVERGED
                break

            direction = next_direction(policy, config.beta_formula, state.g, g_old, d, k=k)
            d = direction.d_new
            restarted, beta, beta_proposed = direction.restarted, direction.beta, direction.beta_proposed
    except (LineSearchError, NumericalBreakdownError) as e:
        state.fail(e)

    return state.result()


def run_gradient_descent(obj: Objective, x0: ArrayLike, config: SolverConfig,
                         solver: str = "ArmijoGD") -> RunResult:
    return run_restarted_ncg(obj, x0, replace(config, restart_policy=RestartKind.ALWAYS), solver=solver)


def run_semi_adaptive_gd(obj: Objective, x0: ArrayLike, config: SolverConfig,
                         solver: str = "SemiAdaptiveGD") -> RunResult:
    """
    Gradient descent with step 1/L_hat, where L_hat doubles until
    f(x - g/L_hat) <= f(x) - ||g||^2 / (2 L_hat) and is halved after each
    accepted step.
    """
    config.validate()
    state = _RunState(obj, x0, solver)
    lipschitz_estimate = SEMI_ADAPTIVE_L0

    try:
        tolerance = state.start(config)
        if state.grad_norm <= tolerance:
            state.status = RunStatus.CONVERGED
            return state.result()

        for k in range(config.max_iterations):
            g = state.g
            d = -g
            slope = float(np.dot(g, d))
            g_sq = float(np.dot(g, g))
            for doublings in range(config.max_backtracks + 1):
                x_trial = state.x - g / lipschitz_estimate
                f_trial = obj.value(x_trial)
                if f_trial <= state.f - g_sq / (2.0 * lipschitz_estimate) and f_trial < state.f:
                    break
                lipschitz_estimate *= 2.0
            else:
                raise LineSearchError(
                    f"Lipschitz estimate reached {lipschitz_estimate:g} without sufficient decrease")

            state.trace.append(IterationRecord(
                k=k, f=state.f, grad_norm=state.grad_norm, alpha=1.0 / lipschitz_estimate,
                backtracks=doublings, restarted=True, beta=0.0, directional_derivative=slope,
                direction_norm=state.grad_norm,
            ))
            state.x, state.f = x_trial, f_trial
            lipschitz_estimate = max(lipschitz_estimate / 2.0, SEMI_ADAPTIVE_L_FLOOR)

            state.set_gradient(obj.gradient(state.x))
            if state.grad_norm <= tolerance:
                state.status = RunStatus.CONVERGED
                break
    except (LineSearchError, NumericalBreakdownError) as e:
        state.fail(e)

    return state.result()


def trace_frame(result: RunResult, include_running_min: bool = False) -> pd.DataFrame:
    frame = pd.DataFrame(
        [(r.k, r.f, r.grad_norm, r.alpha, r.backtracks, r.restarted, r.beta, r.directional_derivative)
         for r in result.trace],
        columns=TRACE_COLUMNS,
    )
    if include_running_min:
        frame["min_grad_norm"] = frame["grad_norm"].cummin()
    return frame


def export_trace_csv(result: RunResult, path: Union[str, Path], include_running_min: bool = False) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    trace_frame(result, include_running_min).to_csv(path, index=False)
    return path
