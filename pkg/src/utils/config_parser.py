"""
Configuration loading for the lab.

Two layers:
1. Lab settings (config/lab.yaml): tolerances and membership thresholds.
2. Experiment configs (JSON or YAML): validated by pydantic models and
   turned into ConfigError with a dotted field path on failure.
"""

import logging
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)

DEFAULT_SETTINGS_PATH = Path(__file__).resolve().parents[2] / "config" / "lab.yaml"


class LabSettings(BaseModel):
    """Resolved lab defaults."""
    model_config = ConfigDict(frozen=True)

    numeric_tolerance: float = 1e-12
    projection_tolerance: float = 1e-10
    relative_tolerance: float = 1e-10
    profile_tolerance: float = 0.05
    fixed_point_threshold: float = 1e-9
    fatou_slack: float = 1e-9
    c0_decay_threshold: float = 0.1
    c0_tail_fraction: float = 0.25
    default_seed: int = 20240613
    max_urn_depth: int = 12


def _flatten_settings(raw: Dict[str, Any]) -> Dict[str, Any]:
    tolerances = raw.get("tolerances", {}) or {}
    c0 = raw.get("c0_membership", {}) or {}
    experiments = raw.get("experiments", {}) or {}
    flat = {
        "numeric_tolerance": tolerances.get("numeric"),
        "projection_tolerance": tolerances.get("projection"),
        "relative_tolerance": tolerances.get("relative"),
        "profile_tolerance": tolerances.get("profile"),
        "fixed_point_threshold": tolerances.get("fixed_point"),
        "fatou_slack": tolerances.get("fatou_slack"),
        "c0_decay_threshold": c0.get("decay_threshold"),
        "c0_tail_fraction": c0.get("tail_fraction"),
        "default_seed": experiments.get("default_seed"),
        "max_urn_depth": experiments.get("max_urn_depth"),
    }
    return {k: v for k, v in flat.items() if v is not None}


@lru_cache(maxsize=None)
def load_settings(path: Optional[str] = None) -> LabSettings:
    """Load lab settings, falling back to built-in defaults."""
    settings_path = Path(path) if path else DEFAULT_SETTINGS_PATH
    if not settings_path.exists():
        logger.warning(f"⚠️ Lab settings not found at {settings_path}, using defaults")
        return LabSettings()
    try:
        with open(settings_path, "r") as f:
            raw = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        logger.warning(f"⚠️ Failed to parse lab settings: {e}")
        return LabSettings()
    return LabSettings(**_flatten_settings(raw))


# ---------------------------------------------------------
# Experiment config schema
# ---------------------------------------------------------

Scalar = Union[float, int, str]


class ModelSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dim: int = Field(ge=1)
    weights: Optional[List[Scalar]] = None
    norm: str = "l1"
    tag: str = "L1"

    @field_validator("norm")
    @classmethod
    def _known_norm(cls, value: str) -> str:
        if value in ("l1", "sup") or value.startswith("lp:"):
            return value
        raise ValueError(f"unknown norm '{value}' (expected l1, sup or lp:<p>)")

    @model_validator(mode="after")
    def _weights_match_dim(self) -> "ModelSpec":
        if self.weights is not None and len(self.weights) != self.dim:
            raise ValueError(f"weights has length {len(self.weights)}, expected {self.dim}")
        return self


class WitnessSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    x0: List[Scalar]
    x0star: List[Scalar]


class FiltrationSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    stages: List[List[List[Scalar]]] = Field(min_length=1)
    witness: Optional[WitnessSpec] = None


class ChainSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mu: List[Scalar] = Field(min_length=1)
    partitions: List[List[List[int]]] = Field(min_length=1)


class GeneratedFiltrationSpec(BaseModel):
    """Named filtration builders: dyadic chains and the c0 block example."""
    model_config = ConfigDict(extra="forbid")

    kind: Literal["dyadic", "block_averaging"]
    depth: Optional[int] = Field(default=None, ge=0, le=12)
    dim: Optional[int] = Field(default=None, ge=2)

    @model_validator(mode="after")
    def _params_present(self) -> "GeneratedFiltrationSpec":
        if self.kind == "dyadic" and self.depth is None:
            raise ValueError("dyadic filtration needs 'depth'")
        if self.kind == "block_averaging" and (self.dim is None or self.dim % 2):
            raise ValueError("block_averaging filtration needs an even 'dim'")
        return self


class ProcessSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["closed_martingale", "random_closed_martingale", "random_submartingale",
                  "urn", "urn_submartingale", "explicit", "block_alternating", "fixture"]
    x: Optional[List[Scalar]] = None
    values: Optional[List[List[Scalar]]] = None
    red: int = Field(default=1, ge=1)
    black: int = Field(default=1, ge=1)
    reinforcement: int = Field(default=1, ge=1)
    depth: Optional[int] = Field(default=None, ge=1)
    drift: Optional[Scalar] = None
    name: Optional[str] = None

    @model_validator(mode="after")
    def _params_present(self) -> "ProcessSpec":
        if self.kind == "closed_martingale" and self.x is None:
            raise ValueError("closed_martingale needs 'x'")
        if self.kind == "explicit" and not self.values:
            raise ValueError("explicit process needs 'values'")
        if self.kind in ("urn", "urn_submartingale") and self.depth is None:
            raise ValueError(f"{self.kind} needs 'depth'")
        if self.kind == "fixture" and not self.name:
            raise ValueError("fixture process needs 'name'")
        return self


class ALViewSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    x0: List[Scalar]
    x0star: List[Scalar]


class TolerancesSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    profile: float = Field(default=0.05, gt=0)
    numeric: float = Field(default=1e-12, gt=0)


DIAGNOSTICS = (
    "validate_filtration", "double_condition", "verify_process", "doob",
    "weaksub", "positive_part", "norm_convergence", "kb_vs_c0", "bochner",
    "schur_contrast",
)


class ExperimentConfig(BaseModel):
    """A runnable experiment description."""
    model_config = ConfigDict(extra="forbid")

    version: int = 1
    name: str
    seed: Optional[int] = Field(default=None, ge=0)
    horizon: int = Field(default=50, ge=2)
    tolerances: TolerancesSpec = TolerancesSpec()
    model: Optional[ModelSpec] = None
    filtration: Optional[FiltrationSpec] = None
    partition_chain: Optional[ChainSpec] = None
    generated_filtration: Optional[GeneratedFiltrationSpec] = None
    fiber: Optional[ModelSpec] = None
    fiber_filtration: Optional[GeneratedFiltrationSpec] = None
    process: Optional[ProcessSpec] = None
    al_view: Optional[ALViewSpec] = None
    positive_part_bound: Optional[float] = Field(default=None, gt=0)
    diagnostics: List[str] = Field(min_length=1)
    expectations: Dict[str, bool] = Field(default_factory=dict)
    output_dir: Optional[str] = None

    @field_validator("diagnostics")
    @classmethod
    def _known_diagnostics(cls, value: List[str]) -> List[str]:
        unknown = [d for d in value if d not in DIAGNOSTICS]
        if unknown:
            raise ValueError(f"unknown diagnostics {unknown}; expected any of {list(DIAGNOSTICS)}")
        return value

    @model_validator(mode="after")
    def _single_filtration_source(self) -> "ExperimentConfig":
        sources = [s for s in (self.filtration, self.partition_chain, self.generated_filtration) if s is not None]
        if len(sources) > 1:
            raise ValueError("give at most one of filtration, partition_chain, generated_filtration")
        if self.fiber_filtration is not None and self.fiber is None:
            raise ValueError("fiber_filtration needs a fiber model")
        if "bochner" in self.diagnostics and self.fiber is None:
            raise ValueError("the bochner diagnostic needs a fiber model")
        return self


def _field_path(error: Dict[str, Any]) -> str:
    return ".".join(str(part) for part in error.get("loc", ())) or "<root>"


def parse_experiment_config(raw: Dict[str, Any]) -> ExperimentConfig:
    """Validate a raw config mapping; raise ConfigError naming the first bad field."""
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        raise ConfigError(first.get("msg", "invalid value"), _field_path(first)) from e


def load_experiment_config(path: Union[str, Path]) -> ExperimentConfig:
    """Load a JSON/YAML experiment config from disk."""
    config_path = Path(path)
    if not config_path.exists():
        raise ConfigError(f"config file not found: {config_path}", "<file>")
    try:
        with open(config_path, "r") as f:
            raw = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"config does not parse: {e}", "<file>") from e
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping", "<root>")
    return parse_experiment_config(raw)
