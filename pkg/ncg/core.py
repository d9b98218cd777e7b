"""
Shared domain types for the restarted nonlinear conjugate gradient library.

Holds the objective-function abstraction with evaluation accounting, the
solver configuration, per-iteration trace records, run results and the
error hierarchy used across the package.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import TYPE_CHECKING, Callable, List, Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray

from config.settings import settings

if TYPE_CHECKING:
    from ncg.certificates import CertificateReport

logger = logging.getLogger(__name__)

Vector = NDArray[np.float64]
Matrix = NDArray[np.float64]


class NCGError(Exception):
    """Base class for library errors."""


class ConfigurationError(NCGError, ValueError):
    """Invalid parameter, unknown name or unknown configuration key."""


class DimensionError(NCGError, ValueError):
    """Vector length does not match the objective dimension."""


class NumericalBreakdownError(NCGError):
    """Function value or gradient is not finite."""


class LineSearchError(NCGError):
    """Backtracking did not find an acceptable step."""


class DegenerateDirectionError(NCGError):
    """The conjugate parameter formula is undefined at the current pair of gradients."""


class BetaFormula(str, Enum):
    FR = "FR"
    PR = "PR"
    PRP_PLUS = "PRP_PLUS"
    HZ = "HZ"


class RestartKind(str, Enum):
    MODIFIED = "MODIFIED"
    STANDARD = "STANDARD"
    ORTHOGONALITY = "ORTHOGONALITY"
    ALWAYS = "ALWAYS"


class WarmStart(str, Enum):
    UNIT = "UNIT"
    DOUBLE_PREVIOUS = "DOUBLE_PREVIOUS"


class StopRule(str, Enum):
    ABSOLUTE = "ABSOLUTE"
    RELATIVE = "RELATIVE"


class RunStatus(str, Enum):
    CONVERGED = "CONVERGED"
    BUDGET_EXHAUSTED = "BUDGET_EXHAUSTED"
    LINESEARCH_FAILED = "LINESEARCH_FAILED"


class Objective:
    """
    Evaluation oracle for f: R^n -> R and its gradient.

    The oracles are fixed at construction; only the counters ``n_f`` and
    ``n_g`` change, once per oracle call.
    """

    def __init__(self, n: int, value_fn: Callable[[Vector], float],
                 gradient_fn: Callable[[Vector], ArrayLike], name: str = "objective"):
        if int(n) < 1:
            raise ConfigurationError(f"Objective dimension must be positive, got {n}")
        self.n = int(n)
        self.name = name
        self._value_fn = value_fn
        self._gradient_fn = gradient_fn
        self.n_f = 0
        self.n_g = 0

    def __repr__(self) -> str:
        return f"Objective(name={self.name!r}, n={self.n}, n_f={self.n_f}, n_g={self.n_g})"

    def _as_point(self, x: ArrayLike) -> Vector:
        point = np.asarray(x, dtype=np.float64)
        if point.shape != (self.n,):
            raise DimensionError(f"Expected a point of length {self.n}, got shape {point.shape}")
        return point

    def value(self, x: ArrayLike) -> float:
        point = self._as_point(x)
        self.n_f += 1
        result = float(self._value_fn(point))
        if not np.isfinite(result):
            raise NumericalBreakdownError(f"{self.name}: non-finite function value {result}")
        return result

    def gradient(self, x: ArrayLike) -> Vector:
        point = self._as_point(x)
        self.n_g += 1
        result = np.asarray(self._gradient_fn(point), dtype=np.float64)
        if result.shape != (self.n,):
            raise DimensionError(
                f"{self.name}: gradient oracle returned shape {result.shape}, expected ({self.n},)")
        if not np.all(np.isfinite(result)):
            raise NumericalBreakdownError(f"{self.name}: non-finite gradient component")
        return result

    def fresh(self) -> "Objective":
        """Same oracles, counters reset to zero."""
        return Objective(self.n, self._value_fn, self._gradient_fn, name=self.name)


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of Algorithm-1 style runs and of the gradient-descent baselines."""

    eta: float = 0.5
    theta: float = 0.5
    sigma: float = 0.01
    kappa: float = 100.0
    p: float = 0.5
    q: float = 0.75
    beta_formula: BetaFormula = BetaFormula.PRP_PLUS
    restart_policy: RestartKind = RestartKind.MODIFIED
    epsilon: float = 1e-4
    max_iterations: int = 10000
    warm_start: WarmStart = WarmStart.DOUBLE_PREVIOUS
    max_backtracks: int = field(default_factory=lambda: settings.MAX_BACKTRACKS)
    stop_rule: StopRule = StopRule.ABSOLUTE
    sigma_orth: float = 0.01

    @classmethod
    def restarted(cls, p: float, **overrides) -> "SolverConfig":
        """Restarted NCG(p) with q = (1+p)/2, so that 1+p-2q = 0."""
        return cls(p=p, q=(1.0 + p) / 2.0, **overrides)

    def with_certificate_defaults(self) -> "SolverConfig":
        return replace(self, warm_start=WarmStart.UNIT)

    def validate(self, certify: bool = False) -> "SolverConfig":
        problems = []
        if not 0.0 < self.eta < 1.0:
            problems.append(f"eta must lie in (0,1), got {self.eta}")
        if not 0.0 < self.theta < 1.0:
            problems.append(f"theta must lie in (0,1), got {self.theta}")
        if not 0.0 < self.sigma <= 1.0:
            problems.append(f"sigma must lie in (0,1], got {self.sigma}")
        if not self.kappa >= 1.0:
            problems.append(f"kappa must be >= 1, got {self.kappa}")
        if not self.p >= 0.0:
            problems.append(f"p must be >= 0, got {self.p}")
        if not self.q >= 0.0:
            problems.append(f"q must be >= 0, got {self.q}")
        if not self.epsilon > 0.0:
            problems.append(f"epsilon must be positive, got {self.epsilon}")
        if int(self.max_iterations) < 1:
            problems.append(f"max_iterations must be positive, got {self.max_iterations}")
        if int(self.max_backtracks) < 1:
            problems.append(f"max_backtracks must be positive, got {self.max_backtracks}")
        if not 0.0 < self.sigma_orth:
            problems.append(f"sigma_orth must be positive, got {self.sigma_orth}")
        for name, enum_type in (("beta_formula", BetaFormula), ("restart_policy", RestartKind),
                                ("warm_start", WarmStart), ("stop_rule", StopRule)):
            if not isinstance(getattr(self, name), enum_type):
                problems.append(f"{name} must be a {enum_type.__name__}, got {getattr(self, name)!r}")

        if certify:
            if 1.0 + self.p - self.q < 0.0:
                problems.append(f"certificates need 1+p-q >= 0, got p={self.p}, q={self.q}")
            elif not self.evaluation_bound_applies:
                logger.warning(f"1+p-2q = {1.0 + self.p - 2.0 * self.q:g} != 0: "
                               f"the function-evaluation bound will not be checked")

        if problems:
            raise ConfigurationError("; ".join(problems))
        return self

    @property
    def evaluation_bound_applies(self) -> bool:
        return abs(1.0 + self.p - 2.0 * self.q) <= 1e-12

    def tolerance(self, initial_grad_norm: float) -> float:
        """Gradient-norm threshold of the configured stopping rule."""
        if self.stop_rule is StopRule.RELATIVE:
            return self.epsilon * max(1.0, initial_grad_norm)
        return self.epsilon


@dataclass(frozen=True)
class IterationRecord:
    """
    One row of a run trace.

    ``restarted`` is true when d_k = -g_k (record 0 always). ``beta`` is the
    effective parameter used to form d_k, 0 on restarts; ``beta_proposed`` is
    what the formula returned before a restart discarded it.
    """

    k: int
    f: float
    grad_norm: float
    alpha: float
    backtracks: int
    restarted: bool
    beta: float
    directional_derivative: float
    direction_norm: float
    beta_proposed: float = 0.0


@dataclass
class RunResult:
    status: RunStatus
    iterations: int
    n_f: int
    n_g: int
    final_grad_norm: float
    final_f: float
    trace: List[IterationRecord] = field(default_factory=list)
    x_final: Optional[Vector] = None
    certificate: Optional["CertificateReport"] = None
    initial_grad_norm: float = 0.0
    solver: str = ""
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.status is RunStatus.CONVERGED

    @property
    def restart_count(self) -> int:
        """Size of the restarted partition, d_0 = -g_0 included."""
        return sum(1 for record in self.trace if record.restarted)

    @property
    def triggered_restarts(self) -> int:
        """Restarts decided by the restart test, i.e. at k >= 1."""
        return sum(1 for record in self.trace[1:] if record.restarted)

    @property
    def restart_pct(self) -> float:
        """100 * triggered restarts / (K - 1); 0 for runs with fewer than two iterations."""
        if len(self.trace) < 2:
            return 0.0
        return 100.0 * self.triggered_restarts / (len(self.trace) - 1)

    def f_values(self) -> List[float]:
        """f_0, ..., f_K (final value appended to the trace values)."""
        values = [record.f for record in self.trace]
        if self.trace:
            values.append(self.final_f)
        return values


def evaluate(obj: Objective, x: ArrayLike) -> float:
    return obj.value(x)


def gradient(obj: Objective, x: ArrayLike) -> Vector:
    return obj.gradient(x)


def check_gradient(obj: Objective, x: ArrayLike, h: float) -> float:
    """
    Largest coordinate error between the analytic gradient and central differences.

    The error is relative to the analytic component, and absolute when that
    component is smaller than 1 in magnitude.
    """
    if not h > 0.0:
        raise ConfigurationError(f"Finite-difference step must be positive, got {h}")
    point = np.asarray(x, dtype=np.float64)
    analytic = obj.gradient(point)

    worst = 0.0
    for i in range(obj.n):
        step = np.zeros(obj.n)
        step[i] = h
        central = (obj.value(point + step) - obj.value(point - step)) / (2.0 * h)
        scale = max(1.0, abs(analytic[i]))
        worst = max(worst, abs(analytic[i] - central) / scale)
    return worst

