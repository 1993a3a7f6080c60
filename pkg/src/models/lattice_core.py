"""
Lattice Core - finite-coordinate vector lattice models

Models L1(mu), lp and sup-normed sequence spaces truncated at a finite
dimension, with the coordinatewise order. Everything here is a pure
function of immutable values:

1. LatticeModel / Element / Functional value types (+ JSON codecs)
2. Lattice calculus: |x|, meet, join, positive and negative parts
3. Norms per model kind (weighted L1, weighted lp, sup)
4. Band projections, weak units and the N/C band decomposition of a functional

Coordinates are numpy vectors: float64 normally, object arrays of
fractions.Fraction in exact mode (any Fraction or "p/q" string input).
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, FrozenSet, Iterable, Optional, Sequence, Tuple

import numpy as np

from src.utils.config_parser import load_settings
from src.utils.errors import ModelMismatchError, PreconditionError, StructuralError

logger = logging.getLogger(__name__)


class NormKind(Enum):
    """Norm attached to a model."""
    L1_WEIGHTED = "l1"
    LP = "lp"
    SUP = "sup"
    C0_TAGGED_SUP = "c0_sup"


class SpaceTag(Enum):
    """Which infinite-dimensional space the truncation stands for."""
    L1 = "L1"
    LP = "Lp"
    ELL_INFINITY = "ell_infinity"
    C0_TRUNCATION = "c0_truncation"
    PRODUCT = "product"


_ALLOWED_NORMS = {
    SpaceTag.L1: {NormKind.L1_WEIGHTED},
    SpaceTag.LP: {NormKind.LP},
    SpaceTag.ELL_INFINITY: {NormKind.SUP},
    SpaceTag.C0_TRUNCATION: {NormKind.SUP, NormKind.C0_TAGGED_SUP},
    SpaceTag.PRODUCT: {NormKind.L1_WEIGHTED},
}


# ---------------------------------------------------------
# Numeric helpers
# ---------------------------------------------------------

def to_scalar(value: Any) -> Any:
    """Parse a JSON scalar: "p/q" strings and Fractions stay exact."""
    if isinstance(value, str):
        return Fraction(value)
    return value


def to_vector(values: Iterable[Any]) -> np.ndarray:
    """Build a coordinate vector, switching to exact mode on rational input."""
    if isinstance(values, np.ndarray):
        if values.dtype == object:
            return np.array([Fraction(v) if not isinstance(v, Fraction) else v for v in values], dtype=object)
        return values.astype(float)
    items = [to_scalar(v) for v in values]
    if any(isinstance(v, Fraction) for v in items):
        return np.array([Fraction(v) for v in items], dtype=object)
    return np.asarray(items, dtype=float)


def to_matrix(rows: Sequence[Sequence[Any]]) -> np.ndarray:
    """Build a square-or-not matrix with the same exactness rule as to_vector."""
    if isinstance(rows, np.ndarray):
        return rows if rows.dtype == object else rows.astype(float)
    parsed = [[to_scalar(v) for v in row] for row in rows]
    if any(isinstance(v, Fraction) for row in parsed for v in row):
        return np.array([[Fraction(v) for v in row] for row in parsed], dtype=object)
    return np.asarray(parsed, dtype=float)


def is_exact(array: np.ndarray) -> bool:
    return array.dtype == object


def jsonable(value: Any) -> Any:
    """Render scalars for JSON: Fractions as 'p/q' strings, numpy floats as floats."""
    if isinstance(value, Fraction):
        return str(value) if value.denominator != 1 else value.numerator
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    return value


def as_float(value: Any) -> float:
    return float(value)


# ---------------------------------------------------------
# Value types
# ---------------------------------------------------------

@dataclass(frozen=True)
class LatticeModel:
    """A finite-coordinate vector lattice with a weight vector and a norm."""
    dim: int
    weights: Tuple[Any, ...]
    norm_kind: NormKind
    space_tag: SpaceTag
    p: Optional[float] = None
    tolerance: float = field(default_factory=lambda: load_settings().numeric_tolerance)
    fiber: Optional["LatticeModel"] = None
    atom_weights: Optional[Tuple[Any, ...]] = None

    def __post_init__(self):
        if self.dim < 1:
            raise StructuralError(f"dim must be >= 1, got {self.dim}")
        if len(self.weights) != self.dim:
            raise StructuralError(f"weights has length {len(self.weights)}, expected {self.dim}")
        if any(w <= 0 for w in self.weights):
            raise StructuralError("all weights must be strictly positive")
        if self.norm_kind not in _ALLOWED_NORMS[self.space_tag]:
            raise StructuralError(
                f"norm '{self.norm_kind.value}' is inconsistent with space tag '{self.space_tag.value}'"
            )
        if self.norm_kind == NormKind.LP and (self.p is None or not 1 < self.p < float("inf")):
            raise StructuralError(f"lp norm needs p in (1, inf), got {self.p}")
        if self.space_tag == SpaceTag.PRODUCT:
            if self.fiber is None or self.atom_weights is None:
                raise StructuralError("product models need a fiber and atom weights")
            if len(self.atom_weights) * self.fiber.dim != self.dim:
                raise StructuralError("product dim must equal atoms x fiber dim")

    @property
    def weight_vector(self) -> np.ndarray:
        return to_vector(self.weights)

    @property
    def is_c0(self) -> bool:
        return self.space_tag == SpaceTag.C0_TRUNCATION

    def with_tolerance(self, tolerance: float) -> "LatticeModel":
        return LatticeModel(self.dim, self.weights, self.norm_kind, self.space_tag, self.p,
                            tolerance, self.fiber, self.atom_weights)

    def to_dict(self) -> Dict[str, Any]:
        if self.norm_kind == NormKind.LP:
            norm = f"lp:{self.p:g}"
        elif self.norm_kind == NormKind.L1_WEIGHTED:
            norm = "l1"
        else:
            norm = "sup"
        data = {
            "dim": self.dim,
            "weights": [jsonable(w) for w in self.weights],
            "norm": norm,
            "tag": self.space_tag.value,
        }
        if self.fiber is not None:
            data["fiber"] = self.fiber.to_dict()
            data["atom_weights"] = [jsonable(w) for w in self.atom_weights]
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any], tolerance: Optional[float] = None) -> "LatticeModel":
        dim = int(data["dim"])
        weights = data.get("weights") or [1] * dim
        tag = SpaceTag(data.get("tag", "L1"))
        norm = data.get("norm", "l1")
        p = None
        if norm == "l1":
            kind = NormKind.L1_WEIGHTED
        elif norm.startswith("lp:"):
            kind, p = NormKind.LP, float(norm.split(":", 1)[1])
        elif norm == "sup":
            kind = NormKind.C0_TAGGED_SUP if tag == SpaceTag.C0_TRUNCATION else NormKind.SUP
        else:
            raise StructuralError(f"unknown norm descriptor '{norm}'")
        tol = tolerance if tolerance is not None else load_settings().numeric_tolerance
        if tag == SpaceTag.PRODUCT:
            fiber = cls.from_dict(data["fiber"], tolerance)
            return product_model([to_scalar(w) for w in data["atom_weights"]], fiber, tol)
        return cls(dim, tuple(to_scalar(w) for w in weights), kind, tag, p, tol)


@dataclass(frozen=True, eq=False)
class Element:
    """A coordinate vector bound to a LatticeModel."""
    coords: np.ndarray
    model: LatticeModel

    def __post_init__(self):
        vector = to_vector(self.coords)
        if vector.ndim != 1 or vector.shape[0] != self.model.dim:
            raise ModelMismatchError(
                f"element has {vector.shape[0] if vector.ndim == 1 else vector.shape} coordinates, "
                f"model dim is {self.model.dim}"
            )
        object.__setattr__(self, "coords", vector)

    # --- lattice calculus ---
    def abs(self) -> "Element":
        return Element(np.abs(self.coords), self.model)

    def pos(self) -> "Element":
        return Element(np.where(self.coords > 0, self.coords, 0 * self.coords), self.model)

    def neg(self) -> "Element":
        return Element(np.where(self.coords < 0, -self.coords, 0 * self.coords), self.model)

    def meet(self, other: "Element") -> "Element":
        _require_same_model(self, other)
        return Element(np.minimum(self.coords, other.coords), self.model)

    def join(self, other: "Element") -> "Element":
        _require_same_model(self, other)
        return Element(np.maximum(self.coords, other.coords), self.model)

    # --- vector space ---
    def __add__(self, other: "Element") -> "Element":
        _require_same_model(self, other)
        return Element(self.coords + other.coords, self.model)

    def __sub__(self, other: "Element") -> "Element":
        _require_same_model(self, other)
        return Element(self.coords - other.coords, self.model)

    def __neg__(self) -> "Element":
        return Element(-self.coords, self.model)

    def __mul__(self, scalar: Any) -> "Element":
        return Element(self.coords * to_scalar(scalar), self.model)

    __rmul__ = __mul__

    # --- order relations ---
    def is_positive(self, tol: Optional[float] = None) -> bool:
        tol = self.model.tolerance if tol is None else tol
        return bool(np.all(self.coords >= -tol))

    def leq(self, other: "Element", tol: Optional[float] = None) -> bool:
        _require_same_model(self, other)
        tol = self.model.tolerance if tol is None else tol
        return bool(np.all(self.coords <= other.coords + tol))

    def equals(self, other: "Element", tol: Optional[float] = None) -> bool:
        _require_same_model(self, other)
        tol = self.model.tolerance if tol is None else tol
        return bool(np.all(np.abs(self.coords - other.coords) <= tol))

    def sup_abs(self) -> Any:
        return np.max(np.abs(self.coords))

    def to_dict(self) -> Dict[str, Any]:
        return {"coords": [jsonable(c) for c in self.coords]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any], model: LatticeModel) -> "Element":
        return cls(to_vector(data["coords"]), model)


@dataclass(frozen=True, eq=False)
class Functional:
    """A positive linear functional given by a nonnegative weight vector."""
    weights: np.ndarray

    def __post_init__(self):
        vector = to_vector(self.weights)
        if np.any(vector < 0):
            raise PreconditionError("functional weights must be nonnegative")
        object.__setattr__(self, "weights", vector)

    @property
    def dim(self) -> int:
        return int(self.weights.shape[0])

    @property
    def strict(self) -> bool:
        return bool(np.all(self.weights > 0))

    def apply(self, x: Element) -> Any:
        if x.model.dim != self.dim:
            raise ModelMismatchError(f"functional dim {self.dim} != element dim {x.model.dim}")
        return np.sum(self.weights * x.coords)

    def __call__(self, x: Element) -> Any:
        return self.apply(x)

    def scaled(self, factor: Any) -> "Functional":
        return Functional(self.weights * to_scalar(factor))

    def to_dict(self) -> Dict[str, Any]:
        return {"weights": [jsonable(w) for w in self.weights]}


@dataclass(frozen=True, eq=False)
class BandDescriptor:
    """A band {x : x_i = 0 off support}, optionally generated by an element."""
    support: FrozenSet[int]
    generator: Optional[Element] = None

    def __post_init__(self):
        if self.generator is not None:
            expected = frozenset(int(i) for i in np.nonzero(np.abs(self.generator.coords) > 0)[0])
            if expected != frozenset(self.support):
                raise StructuralError("band support must equal the generator's support")

    @classmethod
    def from_generator(cls, generator: Element) -> "BandDescriptor":
        support = frozenset(int(i) for i in np.nonzero(np.abs(generator.coords) > 0)[0])
        return cls(support, generator)

    def mask(self, dim: int) -> np.ndarray:
        mask = np.zeros(dim, dtype=bool)
        mask[list(self.support)] = True
        return mask

    def contains(self, x: Element) -> bool:
        off = ~self.mask(x.model.dim)
        return bool(np.all(x.coords[off] == 0))

    def project(self, x: Element) -> Element:
        return Element(np.where(self.mask(x.model.dim), x.coords, 0 * x.coords), x.model)


@dataclass(frozen=True)
class LatticeOps:
    """Result bundle of lattice_ops."""
    abs: Element
    meet: Element
    join: Element
    pos: Element
    neg: Element


# ---------------------------------------------------------
# Model constructors
# ---------------------------------------------------------

def _weights(dim: int, weights: Optional[Sequence[Any]]) -> Tuple[Any, ...]:
    return tuple(to_scalar(w) for w in weights) if weights is not None else tuple([1] * dim)


def l1_model(dim: int, weights: Optional[Sequence[Any]] = None, tolerance: Optional[float] = None) -> LatticeModel:
    tol = load_settings().numeric_tolerance if tolerance is None else tolerance
    return LatticeModel(dim, _weights(dim, weights), NormKind.L1_WEIGHTED, SpaceTag.L1, None, tol)


def lp_model(dim: int, p: float = 2.0, weights: Optional[Sequence[Any]] = None,
             tolerance: Optional[float] = None) -> LatticeModel:
    tol = load_settings().numeric_tolerance if tolerance is None else tolerance
    return LatticeModel(dim, _weights(dim, weights), NormKind.LP, SpaceTag.LP, p, tol)


def sup_model(dim: int, tolerance: Optional[float] = None) -> LatticeModel:
    tol = load_settings().numeric_tolerance if tolerance is None else tolerance
    return LatticeModel(dim, _weights(dim, None), NormKind.SUP, SpaceTag.ELL_INFINITY, None, tol)


def c0_model(dim: int, tolerance: Optional[float] = None) -> LatticeModel:
    tol = load_settings().numeric_tolerance if tolerance is None else tolerance
    return LatticeModel(dim, _weights(dim, None), NormKind.C0_TAGGED_SUP, SpaceTag.C0_TRUNCATION, None, tol)


def product_model(atom_weights: Sequence[Any], fiber: LatticeModel,
                  tolerance: Optional[float] = None) -> LatticeModel:
    """L1(Omega; F) over finitely many atoms: coordinate (w, j) sits at w * fiber.dim + j."""
    tol = load_settings().numeric_tolerance if tolerance is None else tolerance
    mu = tuple(to_scalar(m) for m in atom_weights)
    weights = tuple(m * w for m in mu for w in fiber.weights)
    return LatticeModel(len(mu) * fiber.dim, weights, NormKind.L1_WEIGHTED, SpaceTag.PRODUCT,
                        None, tol, fiber, mu)


def element(model: LatticeModel, coords: Iterable[Any]) -> Element:
    return Element(to_vector(coords), model)


def zeros(model: LatticeModel) -> Element:
    return Element(np.zeros(model.dim), model)


def ones(model: LatticeModel, exact: bool = False) -> Element:
    if exact:
        return Element(np.array([Fraction(1)] * model.dim, dtype=object), model)
    return Element(np.ones(model.dim), model)


def basis(model: LatticeModel, index: int) -> Element:
    coords = np.zeros(model.dim)
    coords[index] = 1.0
    return Element(coords, model)


def harmonic_unit(model: LatticeModel) -> Element:
    """The weak unit (1/i)_i (1-based i)."""
    return Element(1.0 / np.arange(1, model.dim + 1), model)


def default_unit(model: LatticeModel) -> Element:
    """Canonical weak unit: all-ones on L1 kinds, (1/i) on sequence-space kinds."""
    if model.space_tag == SpaceTag.L1:
        return ones(model)
    if model.space_tag == SpaceTag.PRODUCT:
        fiber_unit = default_unit(model.fiber).coords
        return Element(np.tile(fiber_unit, len(model.atom_weights)), model)
    return harmonic_unit(model)


def measure_functional(model: LatticeModel) -> Functional:
    """The functional x -> sum_i w_i x_i of the model's weights."""
    return Functional(model.weight_vector)


def uniform_functional(dim: int, exact: bool = False) -> Functional:
    if exact:
        return Functional(np.array([Fraction(1, dim)] * dim, dtype=object))
    return Functional(np.full(dim, 1.0 / dim))


# ---------------------------------------------------------
# Operations
# ---------------------------------------------------------

def _require_same_model(x: Element, y: Element) -> None:
    if x.model is not y.model and x.model != y.model:
        raise ModelMismatchError(
            f"elements live in different models (dim {x.model.dim} vs {y.model.dim})"
        )


def lattice_ops(x: Element, y: Element) -> LatticeOps:
    """Coordinatewise |x|, x meet y, x join y, x+ and x-."""
    _require_same_model(x, y)
    return LatticeOps(abs=x.abs(), meet=x.meet(y), join=x.join(y), pos=x.pos(), neg=x.neg())


def _norm_coords(coords: np.ndarray, model: LatticeModel) -> Any:
    magnitudes = np.abs(coords)
    if model.space_tag == SpaceTag.PRODUCT:
        fiber = model.fiber
        rows = coords.reshape(len(model.atom_weights), fiber.dim)
        return sum(mu * _norm_coords(row, fiber) for mu, row in zip(model.atom_weights, rows))
    if model.norm_kind == NormKind.L1_WEIGHTED:
        return np.sum(model.weight_vector * magnitudes)
    if model.norm_kind == NormKind.LP:
        w = model.weight_vector.astype(float)
        return float(np.sum(w * magnitudes.astype(float) ** model.p) ** (1.0 / model.p))
    return np.max(magnitudes)


def norm(x: Element) -> Any:
    """Model norm: weighted L1, weighted lp, or sup."""
    return _norm_coords(x.coords, x.model)


def band_projection(gen: Element, x: Element) -> Element:
    """Project x onto the band generated by gen (coordinates where gen vanishes are zeroed)."""
    _require_same_model(gen, x)
    return BandDescriptor.from_generator(gen).project(x)


def _check_positive(x0: Element) -> None:
    if np.any(x0.coords < 0):
        raise PreconditionError("weak-unit candidates must be positive")


def is_weak_unit(x0: Element) -> bool:
    """x meet n*x0 increases to x for every x >= 0; in coordinates: x0 > 0 everywhere."""
    _check_positive(x0)
    return bool(np.all(x0.coords > 0))


def is_quasi_interior(x0: Element) -> bool:
    """x meet n*x0 -> x in norm for every x >= 0.

    Checked on the basis vectors: ||e_i - e_i meet n x0|| vanishes for
    n >= 1/x0_i, and never when x0_i = 0.
    """
    _check_positive(x0)
    for i, value in enumerate(x0.coords):
        if value <= 0:
            return False
        n = int(np.ceil(1 / float(value)))
        e = basis(x0.model, i)
        if float(norm(e - e.meet(x0 * n))) > x0.model.tolerance:
            return False
    return True


def band_decompose(xstar: Functional, x: Element) -> Tuple[Element, Element]:
    """Split x along N = {x*(|x|) = 0} and its disjoint complement C."""
    if xstar.dim != x.model.dim:
        raise ModelMismatchError(f"functional dim {xstar.dim} != element dim {x.model.dim}")
    null = xstar.weights == 0
    zero = 0 * x.coords
    return Element(np.where(null, x.coords, zero), x.model), Element(np.where(null, zero, x.coords), x.model)


def in_tagged_space(x: Element, decay_threshold: Optional[float] = None,
                    tail_fraction: Optional[float] = None) -> bool:
    """Membership of a limit candidate in the space the truncation stands for.

    Only c0 truncations are selective: the trailing coordinates must have
    decayed below the threshold. Other tags accept every finite vector.
    """
    if x.model.space_tag == SpaceTag.PRODUCT and x.model.fiber.is_c0:
        fiber = x.model.fiber
        rows = x.coords.reshape(len(x.model.atom_weights), fiber.dim)
        return all(in_tagged_space(Element(row, fiber), decay_threshold, tail_fraction) for row in rows)
    if not x.model.is_c0:
        return True
    settings = load_settings()
    threshold = settings.c0_decay_threshold if decay_threshold is None else decay_threshold
    fraction = settings.c0_tail_fraction if tail_fraction is None else tail_fraction
    tail = max(1, int(np.ceil(fraction * x.model.dim)))
    return bool(np.max(np.abs(x.coords[-tail:])) <= threshold)
