"""
Report Writer - Experiment Artifact Output

This module writes experiment results to disk. It's the "muscle" of the
lab runner: experiments compute, the writer persists.

Output Layout (per experiment, under the output directory):
- <name>/report.json          full ExperimentReport (sorted keys, no timestamps)
- <name>/metrics.csv          flat experiment,metric,value rows
- <name>/profiles/<key>.csv   one k,c_k table per convergence profile

Reports are deterministic: identical inputs give byte-identical files.
"""

import json
import logging
import re
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd

from src.agents.martingale_lab import ExperimentReport, RunResult

logger = logging.getLogger(__name__)


def _safe_name(key: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", key)


class ReportWriter:
    """
    Writes ExperimentReports as JSON and CSV artifacts.
    Writing is serialized by the caller; one writer may serve many reports.
    """

    def __init__(self, output_dir: str = "results"):
        """
        Initialize the Report Writer.

        Args:
            output_dir: Root directory for experiment artifacts
        """
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def experiment_dir(self, name: str) -> Path:
        return self.output_dir / _safe_name(name)

    def write(self, result: RunResult) -> Path:
        """
        Persist one run.

        Returns:
            Path to the report.json that was written
        """
        report = result.report
        target = self.experiment_dir(report.name)
        target.mkdir(parents=True, exist_ok=True)

        payload = report.to_dict()
        payload["expectations"] = {"ok": result.ok, "mismatches": list(result.mismatches)}
        report_path = target / "report.json"
        report_path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")

        self.write_metrics(report, target / "metrics.csv")
        self.write_profiles(report, target / "profiles")
        logger.debug(f"📋 Wrote {report_path}")
        return report_path

    def write_metrics(self, report: ExperimentReport, path: Path) -> Path:
        frame = pd.DataFrame(report.csv_rows(), columns=["experiment", "metric", "value"])
        frame.to_csv(path, index=False)
        return path

    def write_profiles(self, report: ExperimentReport, directory: Path) -> List[Path]:
        directory.mkdir(parents=True, exist_ok=True)
        written = []
        for key in sorted(report.profiles):
            frame = pd.DataFrame(report.profiles[key].csv_rows(), columns=["k", "c_k"])
            path = directory / f"{_safe_name(key)}.csv"
            frame.to_csv(path, index=False)
            written.append(path)
        return written

    def write_summary(self, results: List[RunResult]) -> Path:
        """A one-row-per-experiment summary table, sorted by name."""
        rows = [{
            "experiment": r.report.name,
            "verdicts": len(r.report.verdicts),
            "passed": sum(1 for v in r.report.verdicts.values() if v),
            "expectations_ok": r.ok,
        } for r in sorted(results, key=lambda r: r.report.name)]
        frame = pd.DataFrame(rows, columns=["experiment", "verdicts", "passed", "expectations_ok"])
        path = self.output_dir / "summary.csv"
        frame.to_csv(path, index=False)
        return path

    def load_report(self, name: str) -> Optional[Dict[str, Any]]:
        """
        Retrieve a written report.

        Returns:
            Report dictionary, or None if it doesn't exist
        """
        path = self.experiment_dir(name) / "report.json"
        if path.exists():
            with open(path, "r") as f:
                return json.load(f)
        return None
