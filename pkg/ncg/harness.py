"""
Batch experiment runner: instance suites, solver rosters and restart
statistics.

Every instance is generated from its own seed (``base_seed + i``) and run by
every solver of the roster from the same starting point. Instances may run
on a thread pool; results are always reduced in instance order, so the
summary does not depend on the parallelism level.
"""

import logging
import math
import re
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np
import pandas as pd

from config.settings import settings
from ncg.certificates import certificate_check
from ncg.core import (BetaFormula, ConfigurationError, Objective, RestartKind, RunResult,
                      SolverConfig, StopRule, Vector, WarmStart)
from ncg.problems import (RASTRIGIN_A, QUADRATIC_CONDITION, ClassicProblem, LossKind,
                          classic_problem, classic_start, generate_dataset, lipschitz_bound,
                          regression_objective)
from ncg.solver import run_gradient_descent, run_restarted_ncg, run_semi_adaptive_gd

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ["solver", "solved", "instances", "avg_restart_pct", "mean_iterations",
                   "mean_function_evals"]
RUN_COLUMNS = ["instance", "solver", "status", "iterations", "n_f", "n_g", "final_grad_norm",
               "restart_pct"]

CLASSIC_CYCLE = (ClassicProblem.ROSENBROCK, ClassicProblem.CONVEX_QUADRATIC,
                 ClassicProblem.RASTRIGIN_SMOOTH)
CLASSIC_PERTURBATION = 0.1

PRESET_NAMES = ["SemiAdaptiveGD", "ArmijoGD", "StandardNCG", "OrthogNCG", "NCG(p)", "NCG(p,q)"]
_NUMBER = r"(\d+(?:\.\d*)?|\.\d+)"
_NCG_PATTERN = re.compile(rf"^NCG\(\s*{_NUMBER}\s*(?:,\s*{_NUMBER}\s*)?\)$")


class SuiteKind(str, Enum):
    SMOOTHED_BIWEIGHT = "SMOOTHED_BIWEIGHT"
    TUKEY = "TUKEY"
    CLASSIC = "CLASSIC"


class EmitFormat(str, Enum):
    CSV = "CSV"
    JSON = "JSON"
    BOTH = "BOTH"


Runner = Callable[[Objective, Vector, SolverConfig, str], RunResult]


@dataclass(frozen=True)
class SolverPreset:
    """A named solver of the roster: a runner plus its configuration."""

    name: str
    runner: Runner
    config: SolverConfig

    @property
    def certifiable(self) -> bool:
        return self.runner is not run_semi_adaptive_gd

    def run(self, obj: Objective, x0: Vector) -> RunResult:
        return self.runner(obj, x0, self.config, self.name)

    def for_certification(self) -> "SolverPreset":
        return replace(self, config=self.config.with_certificate_defaults())


def make_preset(name: str, base: SolverConfig) -> SolverPreset:
    """
    Resolve a roster entry to a preset.

    Names: SemiAdaptiveGD, ArmijoGD, StandardNCG, OrthogNCG and NCG(p) for a
    restarted NCG with parameter p and q = (1+p)/2. NCG(p,q) sets q explicitly.
    """
    name = name.strip()
    if name == "SemiAdaptiveGD":
        return SolverPreset(name, run_semi_adaptive_gd, base)
    if name == "ArmijoGD":
        return SolverPreset(name, run_gradient_descent, replace(base, restart_policy=RestartKind.ALWAYS))
    if name == "StandardNCG":
        return SolverPreset(name, run_restarted_ncg, replace(base, restart_policy=RestartKind.STANDARD))
    if name == "OrthogNCG":
        return SolverPreset(name, run_restarted_ncg,
                            replace(base, restart_policy=RestartKind.ORTHOGONALITY))

    match = _NCG_PATTERN.match(name)
    if match:
        p = float(match.group(1))
        if match.group(2) is None:
            config = replace(base, restart_policy=RestartKind.MODIFIED, p=p, q=(1.0 + p) / 2.0)
            return SolverPreset(f"NCG({p:g})", run_restarted_ncg, config)
        q = float(match.group(2))
        config = replace(base, restart_policy=RestartKind.MODIFIED, p=p, q=q)
        return SolverPreset(f"NCG({p:g},{q:g})", run_restarted_ncg, config)

    raise ConfigurationError(f"Unknown solver preset '{name}'. Available: {PRESET_NAMES}")


def _parse_enum(enum_type, value, key: str):
    try:
        return enum_type(str(getattr(value, "value", value)).upper())
    except ValueError:
        raise ConfigurationError(f"Invalid {key} '{value}'. Available: {[e.value for e in enum_type]}")


def _parse_flag(value, key: str) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("true", "1", "yes"):
        return True
    if text in ("false", "0", "no"):
        return False
    raise ConfigurationError(f"Invalid {key} '{value}', expected true or false")


@dataclass(frozen=True)
class ExperimentConfig:
    suite: SuiteKind = SuiteKind.SMOOTHED_BIWEIGHT
    instances: int = settings.DEFAULT_INSTANCES
    n: int = 30
    m: int = 60
    base_seed: int = 0
    roster: Tuple[str, ...] = ("StandardNCG", "NCG(0)", "NCG(0.25)", "NCG(0.5)", "NCG(0.75)", "NCG(1)")
    epsilon: float = settings.DEFAULT_EPSILON
    budget: int = settings.DEFAULT_BUDGET
    output_dir: str = settings.OUTPUT_DIR
    emit: EmitFormat = EmitFormat.CSV
    parallelism: int = field(default_factory=lambda: settings.WORKERS)
    beta_formula: BetaFormula = BetaFormula.PRP_PLUS
    warm_start: WarmStart = WarmStart.DOUBLE_PREVIOUS
    stop_rule: StopRule = StopRule.ABSOLUTE
    write_traces: bool = False
    c: float = LossKind.tukey().c
    name: str = "experiment"

    _ENUMS = {"suite": SuiteKind, "emit": EmitFormat, "beta_formula": BetaFormula,
              "warm_start": WarmStart, "stop_rule": StopRule}

    @classmethod
    def field_names(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any]) -> "ExperimentConfig":
        unknown = sorted(set(mapping) - set(cls.field_names()))
        if unknown:
            raise ConfigurationError(f"Unknown experiment keys {unknown}. Allowed: {cls.field_names()}")

        values = dict(mapping)
        for key, enum_type in cls._ENUMS.items():
            if key in values:
                values[key] = _parse_enum(enum_type, values[key], key)
        if "roster" in values:
            roster = values["roster"]
            if isinstance(roster, str) or not isinstance(roster, (list, tuple)):
                raise ConfigurationError(f"roster must be a list of preset names, got {roster!r}")
            values["roster"] = tuple(str(entry) for entry in roster)

        try:
            for key in ("instances", "n", "m", "base_seed", "budget", "parallelism"):
                if key in values:
                    values[key] = int(values[key])
            for key in ("epsilon", "c"):
                if key in values:
                    values[key] = float(values[key])
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"Invalid numeric experiment value: {e}")
        if "write_traces" in values:
            values["write_traces"] = _parse_flag(values["write_traces"], "write_traces")

        try:
            seed = settings.seed_override
        except ValueError as e:
            raise ConfigurationError(str(e))
        if seed is not None:
            logger.info(f"NCG_SEED overrides base_seed with {seed}")
            values["base_seed"] = seed
        return cls(**values).validate()

    def validate(self) -> "ExperimentConfig":
        problems = []
        if self.instances < 1:
            problems.append(f"instances must be >= 1, got {self.instances}")
        if self.n < 1 or self.m < 1:
            problems.append(f"n and m must be positive, got n={self.n}, m={self.m}")
        if self.suite is SuiteKind.CLASSIC and self.n < 2:
            problems.append(f"the classic suite needs n >= 2, got {self.n}")
        if self.base_seed < 0:
            problems.append(f"base_seed must be nonnegative, got {self.base_seed}")
        if self.budget < 1:
            problems.append(f"budget must be positive, got {self.budget}")
        if not self.epsilon > 0.0:
            problems.append(f"epsilon must be positive, got {self.epsilon}")
        if self.parallelism < 1:
            problems.append(f"parallelism must be >= 1, got {self.parallelism}")
        if not self.c > 0.0:
            problems.append(f"Tukey parameter c must be positive, got {self.c}")
        if not self.roster:
            problems.append("roster must name at least one solver")
        if problems:
            raise ConfigurationError("; ".join(problems))

        names = [preset.name for preset in self.presets()]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"roster contains duplicate solvers: {names}")
        return self

    def solver_config(self) -> SolverConfig:
        return SolverConfig(beta_formula=self.beta_formula, epsilon=self.epsilon,
                            max_iterations=self.budget, warm_start=self.warm_start,
                            stop_rule=self.stop_rule)

    def presets(self) -> List[SolverPreset]:
        base = self.solver_config()
        return [make_preset(entry, base) for entry in self.roster]

    def loss_kind(self) -> LossKind:
        if self.suite is SuiteKind.TUKEY:
            return LossKind.tukey(self.c)
        return LossKind.smoothed_biweight()

    def to_dict(self) -> Dict[str, Any]:
        data = {}
        for name in self.field_names():
            value = getattr(self, name)
            data[name] = value.value if isinstance(value, Enum) else value
        data["roster"] = list(self.roster)
        return data


@dataclass(frozen=True, eq=False)
class Instance:
    index: int
    seed: int
    objective: Objective
    x0: Vector
    label: str
    L_bound: Optional[float] = None
    f_low: Optional[float] = 0.0


def _classic_lipschitz(problem: ClassicProblem) -> Optional[float]:
    if problem is ClassicProblem.CONVEX_QUADRATIC:
        return QUADRATIC_CONDITION
    if problem is ClassicProblem.RASTRIGIN_SMOOTH:
        return 2.0 + 4.0 * math.pi ** 2 * RASTRIGIN_A
    return None


def build_instance(config: ExperimentConfig, index: int, with_lipschitz: bool = False) -> Instance:
    seed = config.base_seed + index
    if config.suite is SuiteKind.CLASSIC:
        problem = CLASSIC_CYCLE[index % len(CLASSIC_CYCLE)]
        rng = np.random.Generator(np.random.PCG64(seed))
        x0 = classic_start(problem, config.n) + CLASSIC_PERTURBATION * rng.standard_normal(config.n)
        return Instance(index, seed, classic_problem(problem, config.n), x0, problem.value,
                        L_bound=_classic_lipschitz(problem) if with_lipschitz else None)

    dataset = generate_dataset(config.n, config.m, seed)
    kind = config.loss_kind()
    return Instance(index, seed, regression_objective(dataset, kind), np.zeros(config.n),
                    kind.kind.value, L_bound=lipschitz_bound(dataset, kind) if with_lipschitz else None)


@dataclass(frozen=True)
class RunRow:
    instance: int
    solver: str
    result: RunResult

    def to_record(self) -> Dict[str, Any]:
        return {
            "instance": self.instance,
            "solver": self.solver,
            "status": self.result.status.value,
            "iterations": self.result.iterations,
            "n_f": self.result.n_f,
            "n_g": self.result.n_g,
            "final_grad_norm": self.result.final_grad_norm,
            "restart_pct": self.result.restart_pct,
        }


@dataclass(frozen=True)
class SolverStats:
    solver: str
    solved: int
    instances: int
    avg_restart_pct: float
    mean_iterations: float
    mean_function_evals: float


@dataclass
class SuiteSummary:
    """Runs of one suite, ordered by instance and then by roster position."""

    config: ExperimentConfig
    solvers: List[str]
    rows: List[RunRow]

    @property
    def instances(self) -> int:
        return self.config.instances

    def results_for(self, solver: str) -> List[RunResult]:
        if solver not in self.solvers:
            raise ConfigurationError(f"Solver '{solver}' is not in the roster {self.solvers}")
        return [row.result for row in self.rows if row.solver == solver]

    def solver_stats(self, solver: str) -> SolverStats:
        results = self.results_for(solver)
        with_restart_test = [result.restart_pct for result in results if result.iterations > 1]
        return SolverStats(
            solver=solver,
            solved=sum(1 for result in results if result.converged),
            instances=len(results),
            avg_restart_pct=float(np.mean(with_restart_test)) if with_restart_test else 0.0,
            mean_iterations=float(np.mean([result.iterations for result in results])),
            mean_function_evals=float(np.mean([result.n_f for result in results])),
        )

    def summary_frame(self) -> pd.DataFrame:
        records = [vars(self.solver_stats(solver)) for solver in self.solvers]
        return pd.DataFrame(records, columns=SUMMARY_COLUMNS)

    def runs_frame(self) -> pd.DataFrame:
        return pd.DataFrame([row.to_record() for row in self.rows], columns=RUN_COLUMNS)

    def certificate_frame(self) -> pd.DataFrame:
        records = []
        for row in self.rows:
            if row.result.certificate is None:
                continue
            record = {"instance": row.instance, "solver": row.solver}
            record.update(row.result.certificate.to_dict())
            records.append(record)
        return pd.DataFrame(records)

    @property
    def certificate_violations(self) -> int:
        return sum(row.result.certificate.total_violations for row in self.rows
                   if row.result.certificate is not None)


def _run_instance(config: ExperimentConfig, presets: List[SolverPreset], index: int,
                  certify: bool) -> List[RunRow]:
    instance = build_instance(config, index, with_lipschitz=certify)
    rows = []
    for preset in presets:
        result = preset.run(instance.objective.fresh(), instance.x0)
        if certify:
            result.certificate = certificate_check(result, preset.config, instance.L_bound, instance.f_low)
        if result.message:
            logger.warning(f"Instance {index} ({instance.label}), {preset.name}: "
                           f"{result.status.value}: {result.message}")
        rows.append(RunRow(index, preset.name, result))
    return rows


def run_suite(config: ExperimentConfig, certify: bool = False) -> SuiteSummary:
    """
    Run every roster solver on every instance of the suite.

    With ``certify`` the solvers use unit initial steps and every run is
    audited by ``certificate_check`` with the instance's Lipschitz bound and
    f_low = 0. Semi-adaptive GD does not follow the Armijo backtracking
    scheme and is left out of certification.
    """
    presets = config.presets()
    if certify:
        skipped = [preset.name for preset in presets if not preset.certifiable]
        if skipped:
            logger.info(f"Not certifiable, skipped: {skipped}")
        presets = [preset.for_certification() for preset in presets if preset.certifiable]
        if not presets:
            raise ConfigurationError("No certifiable solver in the roster")
        for preset in presets:
            preset.config.validate(certify=True)

    logger.info(f"Running {config.suite.value} suite '{config.name}': {config.instances} instances x "
                f"{len(presets)} solvers, {config.parallelism} worker(s)")

    by_index: Dict[int, List[RunRow]] = {}
    if config.parallelism == 1:
        for index in range(config.instances):
            by_index[index] = _run_instance(config, presets, index, certify)
    else:
        with ThreadPoolExecutor(max_workers=config.parallelism) as executor:
            futures = {executor.submit(_run_instance, config, presets, index, certify): index
                       for index in range(config.instances)}
            for future in as_completed(futures):
                by_index[futures[future]] = future.result()

    rows = [row for index in range(config.instances) for row in by_index[index]]
    summary = SuiteSummary(config=config, solvers=[preset.name for preset in presets], rows=rows)
    for solver in summary.solvers:
        stats = summary.solver_stats(solver)
        logger.info(f"{solver}: solved {stats.solved}/{stats.instances}, "
                    f"avg restart {stats.avg_restart_pct:.2f}%, mean iterations {stats.mean_iterations:.1f}")
    return summary
