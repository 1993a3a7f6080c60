import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

from src.utils.config_parser import ExperimentConfig, parse_experiment_config
from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)

FIXTURES_DIR = Path(__file__).resolve().parents[2] / "fixtures"
FIXTURE_VERSION = 1


class FixtureGallery:
    """
    Reads the versioned counterexample gallery under fixtures/.
    Each fixture is {"version", "name", "description", "experiment"} where
    "experiment" is a complete experiment config.
    """
    def __init__(self, fixtures_path: Optional[Path] = None):
        self.fixtures_path = Path(fixtures_path) if fixtures_path else FIXTURES_DIR

    def _load_json(self, name: str) -> Dict[str, Any]:
        """Internal helper to load the raw fixture."""
        path = self.fixtures_path / f"{name}.json"
        try:
            with open(path, "r") as f:
                data = json.load(f)
        except FileNotFoundError:
            raise ConfigError(f"unknown fixture '{name}' (looked in {self.fixtures_path})", "process.name")
        if data.get("version") != FIXTURE_VERSION:
            raise ConfigError(f"fixture '{name}' has version {data.get('version')}, "
                              f"expected {FIXTURE_VERSION}", "version")
        return data

    def names(self) -> List[str]:
        if not self.fixtures_path.exists():
            logger.warning(f"⚠️ Fixture directory not found: {self.fixtures_path}")
            return []
        return sorted(p.stem for p in self.fixtures_path.glob("*.json"))

    def describe(self) -> List[Dict[str, str]]:
        """Name and description of every fixture, sorted by name."""
        return [{"name": name, "description": self._load_json(name).get("description", "")}
                for name in self.names()]

    def experiment(self, name: str) -> Dict[str, Any]:
        return dict(self._load_json(name)["experiment"])

    def config(self, name: str) -> ExperimentConfig:
        return parse_experiment_config(self.experiment(name))

    def resolve(self, config: ExperimentConfig) -> ExperimentConfig:
        """
        Expand a config whose process is a fixture reference.
        Fields set explicitly in the config override the fixture's.
        """
        if config.process is None or config.process.kind != "fixture":
            return config
        merged = self.experiment(config.process.name)
        overrides = config.model_dump(exclude_unset=True, exclude={"process"})
        merged.update(overrides)
        merged["name"] = config.name
        return parse_experiment_config(merged)
