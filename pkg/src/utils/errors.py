"""
Exception hierarchy for the lab.

Validators report failing properties through their result objects; these
exceptions are reserved for malformed inputs and unmet preconditions.
"""

from typing import Optional


class LabError(ValueError):
    """Base class for every error raised by the lab."""


class ModelMismatchError(LabError):
    """Two elements (or an element and an operator) live in different models."""


class PreconditionError(LabError):
    """An operation was called outside its domain (e.g. a non weak unit)."""


class StructuralError(LabError):
    """A matrix or partition does not have the required shape or sign pattern."""


class HypothesisError(LabError):
    """An experiment's hypotheses are not met (e.g. the double condition fails)."""


class StageAlignmentError(LabError):
    """A process trace does not line up with its filtration stages."""


class ConfigError(LabError):
    """An experiment config failed schema validation."""

    def __init__(self, message: str, field_path: Optional[str] = None):
        self.field_path = field_path
        prefix = f"{field_path}: " if field_path else ""
        super().__init__(f"{prefix}{message}")
