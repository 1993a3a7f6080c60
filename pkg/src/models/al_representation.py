"""
AL Representation - the L-norm of a strictly positive functional

Given a weak unit x0 and a strictly positive functional x0*, the norm
||x||_L = x0*(|x|) turns the model into an AL-space. In finite dimension
the completion is the space itself, so this module exposes the norm, the
isometry onto a probability L1 model (x0 -> constant 1) and the
contraction check for positive operators preserving x0*.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np

from src.models.lattice_core import (
    Element,
    Functional,
    LatticeModel,
    is_weak_unit,
    jsonable,
    l1_model,
    to_matrix,
)
from src.utils.config_parser import load_settings
from src.utils.errors import ModelMismatchError, PreconditionError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ALView:
    """A model seen through a (weak unit, strictly positive functional) pair."""
    base: LatticeModel
    x0star: Functional
    x0: Element

    def __post_init__(self):
        if self.x0.model != self.base or self.x0star.dim != self.base.dim:
            raise ModelMismatchError("x0 and x0star must live on the view's base model")
        if not self.x0star.strict:
            raise PreconditionError("x0star must be strictly positive")
        if not is_weak_unit(self.x0):
            raise PreconditionError("x0 must be a weak unit")

    @property
    def normalized(self) -> bool:
        return abs(self.x0star.apply(self.x0) - 1) <= load_settings().relative_tolerance

    def to_dict(self) -> Dict[str, Any]:
        return {
            "x0": [jsonable(c) for c in self.x0.coords],
            "x0star": [jsonable(w) for w in self.x0star.weights],
            "normalized": self.normalized,
        }


@dataclass(frozen=True)
class ExtensionCheck:
    """Outcome of contractive_extension_check."""
    preserves: bool
    contraction_ratio: float
    probes: int

    def to_dict(self) -> Dict[str, Any]:
        return {"preserves": self.preserves, "contraction_ratio": self.contraction_ratio, "probes": self.probes}


def al_norm(view: ALView, x: Element) -> Any:
    """||x||_L = x0*(|x|)."""
    if x.model != view.base:
        raise ModelMismatchError("element does not live on the view's base model")
    return view.x0star.apply(x.abs())


def normalize_view(view: ALView) -> ALView:
    """Rescale x0* so that x0*(x0) = 1."""
    mass = view.x0star.apply(view.x0)
    return ALView(view.base, view.x0star.scaled(1 / mass), view.x0)


def to_probability_model(view: ALView) -> Tuple[LatticeModel, Element]:
    """The probability L1 model mu_i = x0*_i x0_i, and the image of x0 (all ones).

    Use probability_coordinates to carry further elements across.
    """
    if not view.normalized:
        raise PreconditionError("view is not normalized: rescale with normalize_view first")
    mu = view.x0star.weights * view.x0.coords
    model = l1_model(view.base.dim, list(mu), tolerance=view.base.tolerance)
    return model, probability_coordinates(view, view.x0, model)


def probability_coordinates(view: ALView, x: Element, model: Optional[LatticeModel] = None) -> Element:
    """The lattice isometry x -> (x_i / x0_i)_i."""
    if model is None:
        model, _ = to_probability_model(view)
    return Element(x.coords / view.x0.coords, model)


def contractive_extension_check(view: ALView, operator: Any, probes: int = 100,
                                seed: Optional[int] = None) -> ExtensionCheck:
    """Does T* fix x0*, and how far does T stretch the L-norm on probes?

    When T* x0* = x0*, x0*(|Tx|) <= x0*(T|x|) = x0*(|x|), so the ratio is at most 1.
    """
    matrix = to_matrix(getattr(operator, "matrix", operator))
    if matrix.shape != (view.base.dim, view.base.dim):
        raise ModelMismatchError(f"operator shape {matrix.shape} does not match dim {view.base.dim}")
    if np.any(matrix < 0):
        raise PreconditionError("operator must be entrywise nonnegative")

    w = view.x0star.weights
    image = matrix.T @ w
    scale = max(float(np.max(np.abs(w.astype(float)))), 1.0)
    preserves = bool(np.max(np.abs((image - w).astype(float))) <= load_settings().relative_tolerance * scale)

    rng = np.random.default_rng(load_settings().default_seed if seed is None else seed)
    worst = 0.0
    for _ in range(probes):
        x = Element(rng.normal(size=view.base.dim), view.base)
        denominator = float(al_norm(view, x))
        if denominator == 0:
            continue
        tx = Element(matrix.astype(float) @ x.coords.astype(float), view.base)
        worst = max(worst, float(al_norm(view, tx)) / denominator)

    if preserves and worst > 1 + load_settings().relative_tolerance:
        logger.warning(f"⚠️ Preserving operator stretched the L-norm by {worst:.6g}")
    return ExtensionCheck(preserves=preserves, contraction_ratio=worst, probes=probes)
