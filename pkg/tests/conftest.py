import logging

import pytest

from ncg.core import SolverConfig, WarmStart
from ncg.harness import ExperimentConfig
from ncg.problems import LossKind, generate_dataset, regression_objective
from utils.test_helpers import TestHelpers

logger = logging.getLogger(__name__)


@pytest.fixture
def quadratic():
    """f(x) = ||x||^2 / 2 in two dimensions."""
    return TestHelpers.quadratic(2)


@pytest.fixture(scope="session")
def small_dataset():
    """Desk-scale regression instance, seed 0."""
    return generate_dataset(30, 60, 0)


@pytest.fixture
def biweight_objective(small_dataset):
    return regression_objective(small_dataset, LossKind.smoothed_biweight())


@pytest.fixture
def tukey_objective(small_dataset):
    return regression_objective(small_dataset, LossKind.tukey())


@pytest.fixture
def certificate_config():
    """Restarted NCG(0.5) with unit initial steps."""
    return SolverConfig.restarted(0.5, warm_start=WarmStart.UNIT)


@pytest.fixture
def smoke_experiment(tmp_path):
    """Small suite writing into a temporary directory."""
    return ExperimentConfig(instances=3, n=8, m=16, base_seed=11,
                            roster=("SemiAdaptiveGD", "ArmijoGD", "StandardNCG", "NCG(0.5)"),
                            budget=3000, output_dir=str(tmp_path / "results"), parallelism=1)


@pytest.fixture
def no_seed_override(monkeypatch):
    """Keep NCG_SEED from a developer's .env out of the tests."""
    monkeypatch.delenv("NCG_SEED", raising=False)
