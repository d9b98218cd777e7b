"""
Test problems: synthetic robust-regression instances with the smoothed
biweight and Tukey biweight losses, and a small set of classic analytic
functions.

Random generation uses numpy's PCG64 bit generator seeded with the instance
seed; Gaussian draws come from ``Generator.standard_normal`` (ziggurat
transform of the uniform stream). Instance i of a suite uses seed
``base_seed + i``, so instances can be generated in any order.
"""

import json
import logging
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike
from scipy import linalg

from ncg.core import ConfigurationError, DimensionError, Matrix, Objective, Vector, check_gradient

logger = logging.getLogger(__name__)

TUKEY_DEFAULT_C = math.sqrt(6.0)
BERNOULLI_P = 0.3
Z_STD = 2.0
NOISE_SCALE = 3.0
QUADRATIC_CONDITION = 1e4
RASTRIGIN_A = 10.0


class LossType(str, Enum):
    SMOOTHED_BIWEIGHT = "SMOOTHED_BIWEIGHT"
    TUKEY = "TUKEY"


@dataclass(frozen=True)
class LossKind:
    kind: LossType
    c: float = TUKEY_DEFAULT_C

    def __post_init__(self):
        if not self.c > 0.0:
            raise ConfigurationError(f"Tukey parameter c must be positive, got {self.c}")

    @classmethod
    def smoothed_biweight(cls) -> "LossKind":
        return cls(LossType.SMOOTHED_BIWEIGHT)

    @classmethod
    def tukey(cls, c: float = TUKEY_DEFAULT_C) -> "LossKind":
        return cls(LossType.TUKEY, c)

    @property
    def curvature_bound(self) -> float:
        """sup |psi''|: 2 for the smoothed biweight (at t=0), 1 for Tukey (at t=0)."""
        return 2.0 if self.kind is LossType.SMOOTHED_BIWEIGHT else 1.0


# Smoothed biweight phi(t) = t^2 / (1 + t^2)

def smoothed_biweight(t: ArrayLike) -> np.ndarray:
    t2 = np.square(t)
    return t2 / (1.0 + t2)


def smoothed_biweight_derivative(t: ArrayLike) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    return 2.0 * t / np.square(1.0 + t * t)


def smoothed_biweight_second(t: ArrayLike) -> np.ndarray:
    t2 = np.square(t)
    return (2.0 - 6.0 * t2) / (1.0 + t2) ** 3


# Tukey biweight rho_c; inside [-c, c] it equals (c^2/6) * (1 - (1-u)^3), u = (t/c)^2.
# The ratio is clipped before squaring so large residuals never overflow.

def _tukey_parts(t: ArrayLike, c: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    t = np.asarray(t, dtype=np.float64)
    inside = np.abs(t) <= c
    ratio = np.clip(t / c, -1.0, 1.0)
    return t, inside, ratio * ratio


def tukey(t: ArrayLike, c: float = TUKEY_DEFAULT_C) -> np.ndarray:
    _, inside, u = _tukey_parts(t, c)
    plateau = c * c / 6.0
    return np.where(inside, plateau * (1.0 - (1.0 - u) ** 3), plateau)


def tukey_derivative(t: ArrayLike, c: float = TUKEY_DEFAULT_C) -> np.ndarray:
    t, inside, u = _tukey_parts(t, c)
    return np.where(inside, t * np.square(1.0 - u), 0.0)


def tukey_second(t: ArrayLike, c: float = TUKEY_DEFAULT_C) -> np.ndarray:
    _, inside, u = _tukey_parts(t, c)
    return np.where(inside, (1.0 - u) * (1.0 - 5.0 * u), 0.0)


def loss_functions(kind: LossKind) -> Tuple[Callable, Callable, Callable]:
    """(psi, psi', psi'') for a loss kind."""
    if kind.kind is LossType.SMOOTHED_BIWEIGHT:
        return smoothed_biweight, smoothed_biweight_derivative, smoothed_biweight_second
    c = kind.c
    return (lambda t: tukey(t, c)), (lambda t: tukey_derivative(t, c)), (lambda t: tukey_second(t, c))


@dataclass(frozen=True, eq=False)
class RegressionDataset:
    """
    Robust-regression data b = A z + 3 nu1 + nu2.

    ``z``, ``nu1`` and ``nu2`` are the generation intermediates, kept for
    audits; datasets read back from a JSON export may lack them.
    """

    A: Matrix
    b: Vector
    seed: int
    z: Optional[Vector] = None
    nu1: Optional[Vector] = None
    nu2: Optional[Vector] = None

    def __post_init__(self):
        if self.A.ndim != 2:
            raise DimensionError(f"Design matrix must be 2-D, got shape {self.A.shape}")
        if self.b.shape != (self.A.shape[0],):
            raise DimensionError(f"Response length {self.b.shape} does not match {self.A.shape[0]} rows")

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @classmethod
    def from_components(cls, A: ArrayLike, z: ArrayLike, nu1: ArrayLike, nu2: ArrayLike,
                        seed: int) -> "RegressionDataset":
        A = np.asarray(A, dtype=np.float64)
        z = np.asarray(z, dtype=np.float64)
        nu1 = np.asarray(nu1, dtype=np.float64)
        nu2 = np.asarray(nu2, dtype=np.float64)
        b = A @ z + NOISE_SCALE * nu1 + nu2
        return cls(A=A, b=b, seed=int(seed), z=z, nu1=nu1, nu2=nu2)

    def to_dict(self, include_intermediates: bool = True) -> Dict[str, Any]:
        document = {
            "n": self.n,
            "m": self.m,
            "seed": self.seed,
            "A": self.A.tolist(),
            "b": self.b.tolist(),
        }
        if include_intermediates and self.z is not None:
            document.update(z=self.z.tolist(), nu1=self.nu1.tolist(), nu2=self.nu2.tolist())
        return document

    @classmethod
    def from_dict(cls, document: Dict[str, Any]) -> "RegressionDataset":
        try:
            A = np.asarray(document["A"], dtype=np.float64).reshape(document["m"], document["n"])
            b = np.asarray(document["b"], dtype=np.float64)
            seed = int(document["seed"])
        except KeyError as e:
            raise ConfigurationError(f"Dataset document is missing field {e}")
        extras = {key: np.asarray(document[key], dtype=np.float64)
                  for key in ("z", "nu1", "nu2") if key in document}
        return cls(A=A, b=b, seed=seed, **extras)

    def save_json(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f)
        logger.info(f"Dataset seed={self.seed} exported to {path}")
        return path

    @classmethod
    def load_json(cls, path: Union[str, Path]) -> "RegressionDataset":
        with open(path, 'r', encoding='utf-8') as f:
            return cls.from_dict(json.load(f))


def generate_dataset(n: int, m: int, seed: int) -> RegressionDataset:
    """Rows of A ~ N(0, I_n), z ~ N(0, 4 I_n), nu1 ~ N(0, I_m), nu2 ~ Bernoulli(0.3) in {0, 1}."""
    if n < 1 or m < 1:
        raise ConfigurationError(f"Dataset dimensions must be positive, got n={n}, m={m}")
    if seed < 0:
        raise ConfigurationError(f"Dataset seed must be nonnegative, got {seed}")

    rng = np.random.Generator(np.random.PCG64(seed))
    A = rng.standard_normal((m, n))
    z = Z_STD * rng.standard_normal(n)
    nu1 = rng.standard_normal(m)
    nu2 = (rng.random(m) < BERNOULLI_P).astype(np.float64)
    return RegressionDataset.from_components(A, z, nu1, nu2, seed)


def _residuals(dataset: RegressionDataset, x: ArrayLike) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (dataset.n,):
        raise DimensionError(f"Expected a point of length {dataset.n}, got shape {x.shape}")
    return dataset.A @ x - dataset.b


def loss_value(dataset: RegressionDataset, kind: LossKind, x: ArrayLike) -> float:
    psi, _, _ = loss_functions(kind)
    return float(np.mean(psi(_residuals(dataset, x))))


def loss_gradient(dataset: RegressionDataset, kind: LossKind, x: ArrayLike) -> Vector:
    _, dpsi, _ = loss_functions(kind)
    return dataset.A.T @ dpsi(_residuals(dataset, x)) / dataset.m


def loss_value_grad(dataset: RegressionDataset, kind: LossKind, x: ArrayLike) -> Tuple[float, Vector]:
    psi, dpsi, _ = loss_functions(kind)
    residuals = _residuals(dataset, x)
    return float(np.mean(psi(residuals))), dataset.A.T @ dpsi(residuals) / dataset.m


def lipschitz_bound(dataset: RegressionDataset, kind: LossKind) -> float:
    """(sup|psi''| / m) * lambda_max(A^T A), an upper bound on the gradient Lipschitz constant."""
    gram = dataset.A.T @ dataset.A
    largest = float(linalg.eigvalsh(gram)[-1])
    return kind.curvature_bound * largest / dataset.m


def regression_objective(dataset: RegressionDataset, kind: LossKind) -> Objective:
    return Objective(
        dataset.n,
        lambda x: loss_value(dataset, kind, x),
        lambda x: loss_gradient(dataset, kind, x),
        name=f"{kind.kind.value.lower()}[seed={dataset.seed}]",
    )


class ClassicProblem(str, Enum):
    ROSENBROCK = "ROSENBROCK"
    CONVEX_QUADRATIC = "CONVEX_QUADRATIC"
    RASTRIGIN_SMOOTH = "RASTRIGIN_SMOOTH"


def _parse_classic(name: Union[str, ClassicProblem]) -> ClassicProblem:
    try:
        return ClassicProblem(str(getattr(name, "value", name)).upper())
    except ValueError:
        available = [p.value for p in ClassicProblem]
        raise ConfigurationError(f"Unknown classic problem '{name}'. Available: {available}")


def _rosenbrock(x: Vector) -> float:
    head, tail = x[:-1], x[1:]
    return float(np.sum(100.0 * np.square(tail - head * head) + np.square(1.0 - head)))


def _rosenbrock_gradient(x: Vector) -> Vector:
    head, tail = x[:-1], x[1:]
    coupling = tail - head * head
    g = np.zeros_like(x)
    g[:-1] += -400.0 * head * coupling - 2.0 * (1.0 - head)
    g[1:] += 200.0 * coupling
    return g


def quadratic_diagonal(n: int) -> Vector:
    """Diagonal spanning [1, 1e4] logarithmically (condition number 1e4 for n >= 2)."""
    return np.logspace(0.0, math.log10(QUADRATIC_CONDITION), n)


def classic_problem(name: Union[str, ClassicProblem], n: int) -> Objective:
    problem = _parse_classic(name)
    if n < 1:
        raise ConfigurationError(f"Dimension must be positive, got {n}")

    if problem is ClassicProblem.ROSENBROCK:
        if n < 2:
            raise ConfigurationError("ROSENBROCK needs n >= 2")
        return Objective(n, _rosenbrock, _rosenbrock_gradient, name=f"rosenbrock[n={n}]")

    if problem is ClassicProblem.CONVEX_QUADRATIC:
        diagonal = quadratic_diagonal(n)
        return Objective(n, lambda x: 0.5 * float(np.dot(diagonal * x, x)),
                         lambda x: diagonal * x, name=f"convex_quadratic[n={n}]")

    return Objective(
        n,
        lambda x: float(RASTRIGIN_A * x.size + np.sum(x * x - RASTRIGIN_A * np.cos(2.0 * np.pi * x))),
        lambda x: 2.0 * x + 2.0 * np.pi * RASTRIGIN_A * np.sin(2.0 * np.pi * x),
        name=f"rastrigin_smooth[n={n}]",
    )


def classic_start(name: Union[str, ClassicProblem], n: int) -> Vector:
    problem = _parse_classic(name)
    if problem is ClassicProblem.ROSENBROCK:
        return np.resize(np.array([-1.2, 1.0]), n)
    if problem is ClassicProblem.CONVEX_QUADRATIC:
        return np.ones(n)
    return np.full(n, 1.5)


@dataclass(frozen=True)
class GradientAudit:
    loss: str
    instances: int
    points: int
    max_error: float
    boundary_value_error: float
    boundary_slope_error: float

    def passed(self, tolerance: float) -> bool:
        return (self.max_error <= tolerance and self.boundary_value_error <= 1e-12
                and self.boundary_slope_error <= 1e-12)


def tukey_boundary_errors(c: float = TUKEY_DEFAULT_C) -> Tuple[float, float]:
    """Largest |rho_c(+-c) - c^2/6| and |rho_c'(+-c)|, evaluated on both sides of each knot."""
    knots = np.array([-c, c])
    samples = np.concatenate([knots, np.nextafter(knots, 0.0), np.nextafter(knots, np.sign(knots) * np.inf)])
    value_error = float(np.max(np.abs(tukey(samples, c) - c * c / 6.0)))
    slope_error = float(np.max(np.abs(tukey_derivative(samples, c))))
    return value_error, slope_error


def gradient_audit(kind: LossKind, n: int, m: int, instances: int, points: int, base_seed: int = 0,
                   h: float = 1e-6) -> GradientAudit:
    """
    Worst ``check_gradient`` error over random points of generated instances.

    Points are drawn around the origin with the spread of the true
    coefficients, from a generator seeded independently of the datasets.
    """
    worst = 0.0
    for i in range(instances):
        dataset = generate_dataset(n, m, base_seed + i)
        obj = regression_objective(dataset, kind)
        rng = np.random.Generator(np.random.PCG64([base_seed + i, 1]))
        for _ in range(points):
            worst = max(worst, check_gradient(obj, Z_STD * rng.standard_normal(n), h))

    if kind.kind is LossType.TUKEY:
        value_error, slope_error = tukey_boundary_errors(kind.c)
    else:
        value_error = slope_error = 0.0
    audit = GradientAudit(kind.kind.value, instances, points, worst, value_error, slope_error)
    logger.info(f"Gradient audit {audit.loss}: max error {worst:.3e} over {instances * points} points")
    return audit
