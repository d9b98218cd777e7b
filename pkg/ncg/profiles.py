"""
Data profiles (fraction of instances solved within an iteration budget) and
performance profiles (fraction of instances within a factor tau of the best
solver). Both accept a ``SuiteSummary`` or the long-format runs table read
back from disk, and return a frame with a ``budget_or_tau`` column followed
by one column per solver.
"""

import logging
import math
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ncg.core import ConfigurationError, RunStatus
from ncg.harness import RUN_COLUMNS, SuiteSummary

logger = logging.getLogger(__name__)

AXIS_COLUMN = "budget_or_tau"
METRIC_COLUMNS = {"iterations": "iterations", "function_evals": "n_f"}
TAU_MAX_EXPONENT = 10
TAU_STEPS_PER_DOUBLING = 4

ProfileSource = Union[SuiteSummary, pd.DataFrame]


def _runs(source: ProfileSource) -> pd.DataFrame:
    frame = source.runs_frame() if isinstance(source, SuiteSummary) else source
    missing = [column for column in RUN_COLUMNS if column not in frame.columns]
    if missing:
        raise ConfigurationError(f"Runs table is missing columns {missing}")
    return frame


def _solvers(frame: pd.DataFrame) -> List[str]:
    return [str(solver) for solver in pd.unique(frame["solver"])]


def budget_grid(budget: int) -> List[int]:
    """1, 2, 5, 10, 20, 50, ... up to and including ``budget``."""
    if budget < 1:
        raise ConfigurationError(f"Budget must be positive, got {budget}")
    grid = []
    decade = 1
    while decade <= budget:
        grid.extend(step * decade for step in (1, 2, 5) if step * decade <= budget)
        decade *= 10
    if grid[-1] != budget:
        grid.append(budget)
    return grid


def tau_grid(max_exponent: int = TAU_MAX_EXPONENT, steps: int = TAU_STEPS_PER_DOUBLING) -> List[float]:
    return [2.0 ** (i / steps) for i in range(max_exponent * steps + 1)]


def data_profile(source: ProfileSource, budgets: Optional[Sequence[int]] = None) -> pd.DataFrame:
    frame = _runs(source)
    if budgets is None:
        if isinstance(source, SuiteSummary):
            budgets = budget_grid(source.config.budget)
        else:
            budgets = budget_grid(max(1, int(frame["iterations"].max())))
    budgets = sorted(int(b) for b in budgets)

    instances = frame["instance"].nunique()
    profile = pd.DataFrame({AXIS_COLUMN: budgets})
    for solver in _solvers(frame):
        runs = frame[frame["solver"] == solver]
        solved = runs[runs["status"] == RunStatus.CONVERGED.value]["iterations"].to_numpy()
        profile[solver] = [float(np.count_nonzero(solved <= b)) / instances for b in budgets]
    return profile


def performance_ratios(source: ProfileSource, metric: str = "iterations") -> pd.DataFrame:
    """Instances x solvers table of metric / best metric; inf for unsolved runs."""
    if metric not in METRIC_COLUMNS:
        raise ConfigurationError(f"Unknown metric '{metric}'. Available: {list(METRIC_COLUMNS)}")
    frame = _runs(source).copy()
    solvers = _solvers(frame)

    values = frame[METRIC_COLUMNS[metric]].astype(float).clip(lower=1.0)
    frame["value"] = values.where(frame["status"] == RunStatus.CONVERGED.value, math.inf)
    table = frame.pivot(index="instance", columns="solver", values="value")[solvers]

    best = table.min(axis=1)
    with np.errstate(invalid="ignore"):
        ratios = table.div(best, axis=0)
    # unsolved by every solver: inf / inf
    return ratios.fillna(math.inf)


def performance_profile(source: ProfileSource, metric: str = "iterations",
                        taus: Optional[Sequence[float]] = None) -> pd.DataFrame:
    ratios = performance_ratios(source, metric)
    if len(ratios.columns) < 2:
        logger.warning("Performance profile of a single solver only reflects its solve rate")
    taus = sorted(float(t) for t in (taus if taus is not None else tau_grid()))
    if not taus or taus[-1] != math.inf:
        taus.append(math.inf)

    instances = len(ratios.index)
    profile = pd.DataFrame({AXIS_COLUMN: taus})
    for solver in ratios.columns:
        column = ratios[solver].to_numpy()
        finite = column[np.isfinite(column)]
        profile[solver] = [float(np.count_nonzero(finite <= tau)) / instances for tau in taus]
    return profile
