import json
import logging
from pathlib import Path
from typing import List, Optional, Union

import pandas as pd

from config.settings import settings
from ncg.harness import EmitFormat, ExperimentConfig, RunRow, SuiteSummary
from ncg.solver import export_trace_csv

logger = logging.getLogger(__name__)


class ResultsWriter:
    """Write suite outputs (CSV and/or JSON tables) into one output directory."""

    SUMMARY = "summary"
    RUNS = "runs"
    CERTIFICATES = "certificates"
    MANIFEST = "manifest.json"

    def __init__(self, output_dir: Union[str, Path] = None, emit: EmitFormat = EmitFormat.CSV):
        self.output_dir = Path(output_dir or settings.OUTPUT_DIR)
        self.emit = emit
        self.written: List[Path] = []
        self.config: Optional[ExperimentConfig] = None

    def __enter__(self):
        self.output_dir.mkdir(parents=True, exist_ok=True)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if exc_type is not None:
            logger.error(f"Writing results to {self.output_dir} interrupted: {exc_val}")
        self.write_manifest()

    def _write_table(self, frame: pd.DataFrame, stem: str) -> List[Path]:
        paths = []
        if self.emit in (EmitFormat.CSV, EmitFormat.BOTH):
            path = self.output_dir / f"{stem}.csv"
            frame.to_csv(path, index=False)
            paths.append(path)
        if self.emit in (EmitFormat.JSON, EmitFormat.BOTH):
            path = self.output_dir / f"{stem}.json"
            frame.to_json(path, orient="records", indent=2)
            paths.append(path)
        for path in paths:
            logger.info(f"Wrote {path}")
        self.written.extend(paths)
        return paths

    def write_config(self, config: ExperimentConfig) -> Path:
        self.config = config
        path = self.output_dir / "config.json"
        document = config.to_dict()
        document["x0"] = "classic start + perturbation" if config.suite.value == "CLASSIC" else "zeros"
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(document, f, indent=2)
        self.written.append(path)
        return path

    def write_summary(self, summary: SuiteSummary) -> List[Path]:
        return self._write_table(summary.summary_frame(), self.SUMMARY)

    def write_runs(self, summary: SuiteSummary) -> List[Path]:
        return self._write_table(summary.runs_frame(), self.RUNS)

    def write_certificates(self, summary: SuiteSummary) -> List[Path]:
        return self._write_table(summary.certificate_frame(), self.CERTIFICATES)

    def write_profile(self, frame: pd.DataFrame, name: str) -> List[Path]:
        return self._write_table(frame, name)

    def write_traces(self, rows: List[RunRow]) -> List[Path]:
        paths = []
        for row in rows:
            filename = f"{row.solver}_{row.instance:05d}.csv".replace("(", "_").replace(")", "")
            paths.append(export_trace_csv(row.result, self.output_dir / "traces" / filename,
                                          include_running_min=True))
        if paths:
            logger.info(f"Wrote {len(paths)} trace files to {self.output_dir / 'traces'}")
        self.written.extend(paths)
        return paths

    def write_suite(self, summary: SuiteSummary, certify: bool = False) -> List[Path]:
        self.write_config(summary.config)
        paths = self.write_summary(summary) + self.write_runs(summary)
        if certify:
            paths += self.write_certificates(summary)
        if summary.config.write_traces:
            paths += self.write_traces(summary.rows)
        return paths

    def write_manifest(self) -> Path:
        path = self.output_dir / self.MANIFEST
        files = {str(p.relative_to(self.output_dir)) for p in self.written}
        experiment = self.config.name if self.config else None
        if path.exists():
            with open(path, 'r', encoding='utf-8') as f:
                previous = json.load(f)
            files.update(previous.get("files", []))
            experiment = experiment or previous.get("experiment")
        document = {"experiment": experiment, "files": sorted(files)}
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(document, f, indent=2)
        return path

    @staticmethod
    def load_runs(output_dir: Union[str, Path]) -> pd.DataFrame:
        """Long-format runs table stored by a previous ``run``."""
        output_dir = Path(output_dir)
        csv_path = output_dir / f"{ResultsWriter.RUNS}.csv"
        json_path = output_dir / f"{ResultsWriter.RUNS}.json"
        if csv_path.exists():
            return pd.read_csv(csv_path)
        if json_path.exists():
            return pd.read_json(json_path, orient="records")
        available = sorted(p.name for p in output_dir.glob("*")) if output_dir.exists() else []
        raise FileNotFoundError(f"No stored runs in '{output_dir}'. Found: {available}")
