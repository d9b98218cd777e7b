import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Union

import yaml

from config.settings import settings
from ncg.core import ConfigurationError
from ncg.harness import ExperimentConfig

logger = logging.getLogger(__name__)

SUFFIXES = (".json", ".yaml", ".yml")


def read_config_document(path: Union[str, Path]) -> Dict[str, Any]:
    """Parse a JSON or YAML experiment document into a mapping."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Experiment config not found: {path}")

    with open(path, 'r', encoding='utf-8') as f:
        try:
            if path.suffix.lower() in (".yaml", ".yml"):
                document = yaml.safe_load(f)
            else:
                document = json.load(f)
        except (json.JSONDecodeError, yaml.YAMLError) as e:
            raise ConfigurationError(f"Cannot parse {path}: {e}")

    if not isinstance(document, dict):
        raise ConfigurationError(f"{path} must contain a mapping of experiment fields")
    return document


def load_experiment_config(path: Union[str, Path]) -> ExperimentConfig:
    document = read_config_document(path)
    document.setdefault("name", Path(path).stem)
    config = ExperimentConfig.from_mapping(document)
    logger.info(f"Loaded experiment '{config.name}' from {path}")
    return config


class ExperimentConfigLoader:
    """Stored experiment configurations of a directory, addressed by file stem."""

    def __init__(self, experiments_dir: Union[str, Path] = None):
        self.experiments_dir = Path(experiments_dir or settings.EXPERIMENTS_DIR)
        if not self.experiments_dir.exists():
            raise FileNotFoundError(f"Experiments directory not found: {self.experiments_dir}")

    def _files(self) -> List[Path]:
        return sorted(p for p in self.experiments_dir.iterdir() if p.suffix.lower() in SUFFIXES)

    def list_available_configs(self) -> List[str]:
        return [p.stem for p in self._files()]

    def load(self, name: str) -> ExperimentConfig:
        for path in self._files():
            if path.stem == name:
                return load_experiment_config(path)
        raise FileNotFoundError(
            f"Experiment '{name}' not found. Available: {self.list_available_configs()}"
        )

    def resolve(self, reference: Union[str, Path]) -> ExperimentConfig:
        """A file path when it exists, otherwise a stored experiment name."""
        if Path(reference).exists():
            return load_experiment_config(reference)
        return self.load(str(reference))
