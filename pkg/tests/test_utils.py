import json
from pathlib import Path

import pandas as pd
import pytest

from ncg.core import ConfigurationError
from ncg.harness import EmitFormat, SuiteKind, run_suite
from utils.config_loader import ExperimentConfigLoader, load_experiment_config, read_config_document
from utils.results_writer import ResultsWriter

EXPERIMENTS_DIR = Path(__file__).resolve().parent.parent / "experiments"


@pytest.mark.unit
class TestConfigLoader:
    """Experiment files in JSON and YAML."""

    def test_stored_experiments_load(self, no_seed_override):
        loader = ExperimentConfigLoader(EXPERIMENTS_DIR)
        names = loader.list_available_configs()
        assert "smoothed_biweight_prp" in names
        for name in names:
            config = loader.load(name)
            assert config.name == name
            assert config.presets()

    def test_classic_experiment_uses_relative_stopping(self, no_seed_override):
        config = ExperimentConfigLoader(EXPERIMENTS_DIR).load("classic_fr")
        assert config.suite is SuiteKind.CLASSIC
        assert config.stop_rule.value == "RELATIVE"
        assert config.epsilon == 1e-5
        assert config.n == 10

    def test_yaml_document(self, tmp_path, no_seed_override):
        path = tmp_path / "tukey.yaml"
        path.write_text("suite: TUKEY\ninstances: 2\nroster:\n  - ArmijoGD\n  - NCG(1)\n", encoding="utf-8")
        config = load_experiment_config(path)
        assert config.suite is SuiteKind.TUKEY
        assert config.roster == ("ArmijoGD", "NCG(1)")
        assert config.name == "tukey"

    def test_unknown_name_lists_available(self):
        with pytest.raises(FileNotFoundError, match="Available"):
            ExperimentConfigLoader(EXPERIMENTS_DIR).load("cutest")

    def test_resolve_prefers_existing_path(self, tmp_path, no_seed_override):
        path = tmp_path / "smoke.json"
        path.write_text(json.dumps({"instances": 1, "roster": ["ArmijoGD"]}), encoding="utf-8")
        loader = ExperimentConfigLoader(EXPERIMENTS_DIR)
        assert loader.resolve(path).roster == ("ArmijoGD",)
        assert loader.resolve("smoke").instances == 3

    def test_missing_directory(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            ExperimentConfigLoader(tmp_path / "nowhere")

    def test_malformed_documents(self, tmp_path):
        broken = tmp_path / "broken.json"
        broken.write_text("{", encoding="utf-8")
        with pytest.raises(ConfigurationError):
            read_config_document(broken)
        listing = tmp_path / "list.json"
        listing.write_text("[1, 2]", encoding="utf-8")
        with pytest.raises(ConfigurationError):
            read_config_document(listing)


@pytest.mark.integration
class TestResultsWriter:

    def test_tables_in_both_formats(self, smoke_experiment, tmp_path):
        summary = run_suite(smoke_experiment)
        with ResultsWriter(tmp_path, EmitFormat.BOTH) as writer:
            writer.write_suite(summary)
        from_csv = pd.read_csv(tmp_path / "summary.csv")
        from_json = pd.read_json(tmp_path / "summary.json", orient="records")
        assert list(from_csv["solver"]) == list(from_json["solver"])
        config = json.loads((tmp_path / "config.json").read_text(encoding="utf-8"))
        assert config["x0"] == "zeros"

    def test_load_runs(self, smoke_experiment, tmp_path):
        summary = run_suite(smoke_experiment)
        with ResultsWriter(tmp_path, EmitFormat.JSON) as writer:
            writer.write_runs(summary)
        runs = ResultsWriter.load_runs(tmp_path)
        assert len(runs) == len(summary.rows)

    def test_manifest_accumulates(self, smoke_experiment, tmp_path):
        summary = run_suite(smoke_experiment)
        with ResultsWriter(tmp_path) as writer:
            writer.write_summary(summary)
        with ResultsWriter(tmp_path) as writer:
            writer.write_runs(summary)
        manifest = json.loads((tmp_path / ResultsWriter.MANIFEST).read_text(encoding="utf-8"))
        assert manifest["files"] == ["runs.csv", "summary.csv"]
