"""
Filtration Validator - positive projections, conditional expectations and the double condition

A filtration is a list of positive projections with E_n E_m = E_m E_n = E_{min(m,n)}.
It is abstract bistochastic when E_1 fixes a weak unit x0 and E_1* fixes a
strictly positive functional x0*. This tool:

1. Validates filtrations (projection, positivity, compatibility, the double condition, boundedness)
2. Builds conditional expectations from refining partition chains
3. Decides the double condition structurally and cross-checks it with a
   fixed-point search (linear program over the fixed-point subspace)
4. Recovers the partition behind a conditional-expectation matrix

Reports follow the issue-list shape: every failed property becomes a
ValidationIssue instead of an exception.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import orth
from scipy.optimize import linprog

from src.models.lattice_core import (
    Element,
    Functional,
    LatticeModel,
    NormKind,
    SpaceTag,
    c0_model,
    is_exact,
    jsonable,
    l1_model,
    norm,
    ones,
    product_model,
    to_matrix,
    to_vector,
)
from src.utils.config_parser import load_settings
from src.utils.errors import ModelMismatchError, StructuralError

logger = logging.getLogger(__name__)


class ValidationStatus(Enum):
    """Validation result status."""
    PASS = "pass"
    FAIL = "fail"
    WARNING = "warning"


class ProjectionKind(Enum):
    GENERAL_POSITIVE = "general_positive"
    BAND = "band"
    CONDITIONAL_EXPECTATION = "conditional_expectation"


@dataclass
class ValidationIssue:
    """A single failed (or noteworthy) property."""
    severity: ValidationStatus
    stage: Optional[str]
    issue_type: str
    message: str
    expected: Optional[str] = None
    actual: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "severity": self.severity.value,
            "stage": self.stage,
            "issue_type": self.issue_type,
            "message": self.message,
            "expected": self.expected,
            "actual": self.actual,
        }


# ---------------------------------------------------------
# Projections and filtrations
# ---------------------------------------------------------

def _max_abs(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(matrix))) if matrix.size else 0.0


def _integer_form(matrix: np.ndarray) -> Tuple[np.ndarray, int]:
    """A common-denominator integer matrix (object dtype) and its denominator."""
    entries = [Fraction(v) for v in matrix.flat]
    denominator = math.lcm(*(v.denominator for v in entries)) if entries else 1
    ints = np.array([int(v * denominator) for v in entries], dtype=object).reshape(matrix.shape)
    return ints, denominator


def product_gap(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> float:
    """max |a @ b - c| entrywise; exact when all three matrices are rational."""
    if not (is_exact(a) and is_exact(b) and is_exact(c)):
        return _max_abs(a.astype(float) @ b.astype(float) - c.astype(float))
    ia, da = _integer_form(a)
    ib, db = _integer_form(b)
    ic, dc = _integer_form(c)
    diff = (ia @ ib) * dc - ic * (da * db)
    worst = max((abs(int(v)) for v in diff.flat), default=0)
    return float(Fraction(worst, da * db * dc))


@dataclass(frozen=True, eq=False)
class Projection:
    """A square, entrywise nonnegative, idempotent matrix."""
    matrix: np.ndarray
    kind: ProjectionKind = ProjectionKind.GENERAL_POSITIVE
    tolerance: float = field(default_factory=lambda: load_settings().projection_tolerance)

    def __post_init__(self):
        matrix = to_matrix(self.matrix)
        object.__setattr__(self, "matrix", matrix)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise StructuralError(f"projection matrix must be square, got shape {matrix.shape}")
        if np.any(matrix < 0):
            raise StructuralError("projection matrix has a negative entry")
        if product_gap(matrix, matrix, matrix) > self.tolerance:
            raise StructuralError("matrix is not idempotent (E @ E != E)")

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    def apply(self, x: Element) -> Element:
        if x.model.dim != self.dim:
            raise ModelMismatchError(f"projection dim {self.dim} != element dim {x.model.dim}")
        return Element(self.matrix @ x.coords, x.model)

    def __call__(self, x: Element) -> Element:
        return self.apply(x)

    def adjoint(self, f: Functional) -> Functional:
        return Functional(self.matrix.T @ f.weights)

    def fixes(self, x: Element, tol: Optional[float] = None) -> bool:
        tol = self.tolerance if tol is None else tol
        return float(np.max(np.abs(self.matrix @ x.coords - x.coords))) <= tol

    def adjoint_fixes(self, f: Functional, tol: Optional[float] = None) -> bool:
        tol = self.tolerance if tol is None else tol
        return float(np.max(np.abs(self.matrix.T @ f.weights - f.weights))) <= tol

    def to_rows(self) -> List[List[Any]]:
        return [[jsonable(v) for v in row] for row in self.matrix]


@dataclass(frozen=True, eq=False)
class BistochasticWitness:
    """The (x0, x0*) pair of the double condition: E_n x0 = x0 and E_n* x0* = x0* for all n."""
    x0: Element
    x0star: Functional

    def to_dict(self) -> Dict[str, Any]:
        return {"x0": [jsonable(c) for c in self.x0.coords],
                "x0star": [jsonable(w) for w in self.x0star.weights]}


@dataclass(frozen=True, eq=False)
class Filtration:
    """Ordered stages E_1..E_T over one model, with an optional double-condition witness."""
    stages: Tuple[Projection, ...]
    model: LatticeModel
    bistochastic_witness: Optional[BistochasticWitness] = None

    def __post_init__(self):
        stages = tuple(self.stages)
        object.__setattr__(self, "stages", stages)
        if not stages:
            raise StructuralError("a filtration needs at least one stage")
        for n, stage in enumerate(stages, start=1):
            if stage.dim != self.model.dim:
                raise StructuralError(f"stage {n} has dim {stage.dim}, model dim is {self.model.dim}")

    def __len__(self) -> int:
        return len(self.stages)

    def __getitem__(self, index: int) -> Projection:
        return self.stages[index]

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"stages": [s.to_rows() for s in self.stages]}
        if self.bistochastic_witness is not None:
            data["witness"] = self.bistochastic_witness.to_dict()
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any], model: LatticeModel) -> "Filtration":
        stages = tuple(Projection(to_matrix(rows)) for rows in data["stages"])
        witness = None
        if data.get("witness"):
            witness = BistochasticWitness(Element(to_vector(data["witness"]["x0"]), model),
                                          Functional(to_vector(data["witness"]["x0star"])))
        return cls(stages, model, witness)


@dataclass
class FiltrationReport:
    """Result of validate_filtration."""
    compatible: bool = True
    bistochastic: bool = False
    bounded_const: float = 0.0
    status: ValidationStatus = ValidationStatus.PASS
    issues: List[ValidationIssue] = field(default_factory=list)
    passed_checks: int = 0
    failed_checks: int = 0

    @property
    def is_valid(self) -> bool:
        return self.status == ValidationStatus.PASS

    def add_issue(self, issue: ValidationIssue) -> None:
        self.issues.append(issue)
        if issue.severity == ValidationStatus.FAIL:
            self.failed_checks += 1
            self.status = ValidationStatus.FAIL
        elif issue.severity == ValidationStatus.WARNING and self.status != ValidationStatus.FAIL:
            self.status = ValidationStatus.WARNING

    def to_dict(self) -> Dict[str, Any]:
        return {
            "status": self.status.value,
            "compatible": self.compatible,
            "bistochastic": self.bistochastic,
            "bounded_const": self.bounded_const,
            "passed_checks": self.passed_checks,
            "failed_checks": self.failed_checks,
            "issues": [i.to_dict() for i in self.issues],
        }


def operator_norm(stage: Projection, model: LatticeModel, probes: int = 64) -> float:
    """Operator norm induced by the model norm.

    Exact for weighted L1 (weighted column sums) and sup (row sums); a
    probe-based lower estimate for lp and product models.
    """
    a = stage.matrix
    if model.space_tag != SpaceTag.PRODUCT and model.norm_kind == NormKind.L1_WEIGHTED:
        w = model.weight_vector
        column = (w @ np.abs(a)) / w
        return float(np.max(column))
    if model.norm_kind in (NormKind.SUP, NormKind.C0_TAGGED_SUP):
        return float(np.max(np.abs(a).sum(axis=1)))
    rng = np.random.default_rng(load_settings().default_seed)
    candidates = [np.eye(model.dim)[i] for i in range(model.dim)] + [np.ones(model.dim)]
    candidates += [np.abs(rng.normal(size=model.dim)) for _ in range(probes)]
    dense = a.astype(float)
    best = 0.0
    for v in candidates:
        x = Element(v, model)
        for _ in range(8):
            image = Element(dense @ x.coords.astype(float), model)
            ratio = float(norm(image)) / float(norm(x))
            best = max(best, ratio)
            if float(norm(image)) == 0:
                break
            x = image
    return best


def validate_filtration(filtration: Filtration, tol: Optional[float] = None) -> FiltrationReport:
    """Check compatibility, the double condition and boundedness of a filtration."""
    tol = load_settings().projection_tolerance if tol is None else tol
    report = FiltrationReport()
    stages = filtration.stages
    logger.info(f"🔍 Validating filtration with {len(stages)} stages (dim {filtration.model.dim})")

    for i, ei in enumerate(stages):
        for j in range(i + 1, len(stages)):
            ej = stages[j]
            for label, left, right in ((f"E{i + 1}E{j + 1}", ei, ej), (f"E{j + 1}E{i + 1}", ej, ei)):
                gap = product_gap(left.matrix, right.matrix, ei.matrix)
                if gap > tol:
                    report.compatible = False
                    report.add_issue(ValidationIssue(
                        severity=ValidationStatus.FAIL,
                        stage=label,
                        issue_type="incompatible_stages",
                        message=f"{label} differs from E{i + 1}",
                        expected=f"E{i + 1}",
                        actual=f"max entry gap {gap:.3g}",
                    ))
                else:
                    report.passed_checks += 1

    witness = filtration.bistochastic_witness
    if witness is not None:
        report.bistochastic = True
        for n, stage in enumerate(stages, start=1):
            if not stage.fixes(witness.x0, tol):
                report.bistochastic = False
                report.add_issue(ValidationIssue(
                    severity=ValidationStatus.FAIL, stage=f"E{n}", issue_type="weak_unit_not_fixed",
                    message=f"E{n} x0 != x0", expected="E x0 = x0", actual="moved"))
            if not stage.adjoint_fixes(witness.x0star, tol):
                report.bistochastic = False
                report.add_issue(ValidationIssue(
                    severity=ValidationStatus.FAIL, stage=f"E{n}", issue_type="functional_not_fixed",
                    message=f"E{n}* x0* != x0*", expected="E* x0* = x0*", actual="moved"))
        if not witness.x0star.strict or np.any(witness.x0.coords <= 0):
            report.bistochastic = False
            report.add_issue(ValidationIssue(
                severity=ValidationStatus.FAIL, stage=None, issue_type="degenerate_witness",
                message="witness must be a weak unit and a strictly positive functional"))
        if report.bistochastic:
            report.passed_checks += 1

    report.bounded_const = max(operator_norm(stage, filtration.model) for stage in stages)
    if report.status == ValidationStatus.PASS:
        logger.info(f"✅ Filtration valid (bounded_const {report.bounded_const:g})")
    else:
        logger.info(f"❌ Filtration failed {report.failed_checks} checks")
    return report


# ---------------------------------------------------------
# Partition chains and conditional expectations
# ---------------------------------------------------------

Partition = Tuple[Tuple[int, ...], ...]


@dataclass(frozen=True, eq=False)
class PartitionChain:
    """A probability vector over atoms and successively finer partitions."""
    sample_weights: np.ndarray
    partitions: Tuple[Partition, ...]

    def __post_init__(self):
        mu = to_vector(self.sample_weights)
        object.__setattr__(self, "sample_weights", mu)
        parts = tuple(tuple(tuple(int(a) for a in block) for block in p) for p in self.partitions)
        object.__setattr__(self, "partitions", parts)
        if np.any(mu < 0):
            raise StructuralError("sample weights must be nonnegative")
        if abs(np.sum(mu) - 1) > load_settings().relative_tolerance:
            raise StructuralError(f"sample weights must sum to 1, got {float(np.sum(mu)):.6g}")
        if not parts:
            raise StructuralError("a chain needs at least one partition")
        atoms = set(range(self.dim))
        for t, partition in enumerate(parts):
            seen: List[int] = [a for block in partition for a in block]
            if any(not block for block in partition):
                raise StructuralError(f"partition {t} has an empty block")
            if len(seen) != len(set(seen)) or set(seen) != atoms:
                raise StructuralError(f"partition {t} blocks must be disjoint and cover all atoms")
        for t in range(len(parts) - 1):
            if not _refines(parts[t + 1], parts[t]):
                raise StructuralError(f"partition {t + 1} does not refine partition {t}")

    @property
    def dim(self) -> int:
        return int(self.sample_weights.shape[0])

    def __len__(self) -> int:
        return len(self.partitions)

    def to_dict(self) -> Dict[str, Any]:
        return {"mu": [jsonable(m) for m in self.sample_weights],
                "partitions": [[list(b) for b in p] for p in self.partitions]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PartitionChain":
        return cls(to_vector(data["mu"]), tuple(tuple(tuple(b) for b in p) for p in data["partitions"]))


def _refines(fine: Partition, coarse: Partition) -> bool:
    """Every block of the coarse partition is a union of fine blocks."""
    owner = {a: i for i, block in enumerate(coarse) for a in block}
    return all(len({owner[a] for a in block}) == 1 for block in fine)


def conditional_expectation(chain: PartitionChain, t: int) -> Projection:
    """E(. | partition t): entry (i, j) = mu_j / mu(B) when i, j share block B."""
    if not 0 <= t < len(chain):
        raise StructuralError(f"stage index {t} out of range 0..{len(chain) - 1}")
    mu = chain.sample_weights
    exact = is_exact(mu)
    matrix = np.zeros((chain.dim, chain.dim), dtype=object if exact else float)
    if exact:
        matrix[:, :] = Fraction(0)
    for block in chain.partitions[t]:
        mass = sum(mu[a] for a in block)
        if mass <= 0:
            raise StructuralError(f"block {list(block)} has zero probability")
        for i in block:
            for j in block:
                matrix[i, j] = mu[j] / mass
    return Projection(matrix, ProjectionKind.CONDITIONAL_EXPECTATION)


def chain_model(chain: PartitionChain, tolerance: Optional[float] = None) -> LatticeModel:
    if np.any(chain.sample_weights <= 0):
        raise StructuralError("atoms with zero probability cannot carry a weighted L1 model")
    return l1_model(chain.dim, list(chain.sample_weights), tolerance)


def chain_to_filtration(chain: PartitionChain) -> Filtration:
    """Classical filtration of a chain, with witness (all ones, mu)."""
    model = chain_model(chain)
    stages = tuple(conditional_expectation(chain, t) for t in range(len(chain)))
    witness = BistochasticWitness(ones(model, exact=is_exact(chain.sample_weights)), Functional(chain.sample_weights))
    filtration = Filtration(stages, model, witness)
    report = validate_filtration(filtration)
    if not (report.compatible and report.bistochastic and abs(report.bounded_const - 1) <= 1e-9):
        raise StructuralError(f"chain produced an invalid filtration: {report.to_dict()['issues']}")
    return filtration


def dyadic_chain(depth: int, mu: Optional[Sequence[Any]] = None) -> PartitionChain:
    """2**depth atoms; stage t has blocks of size 2**(depth - t), t = 0..depth."""
    dim = 2 ** depth
    weights = to_vector(mu) if mu is not None else np.array([Fraction(1, dim)] * dim, dtype=object)
    partitions = []
    for t in range(depth + 1):
        size = 2 ** (depth - t)
        partitions.append(tuple(tuple(range(s, s + size)) for s in range(0, dim, size)))
    return PartitionChain(weights, tuple(partitions))


def block_averaging_filtration(dim: int = 8, exact: bool = True) -> Filtration:
    """The c0 block filtration: E_1 averages consecutive pairs; E_n keeps the first n-1 pairs."""
    if dim < 2 or dim % 2:
        raise StructuralError("block averaging needs an even dim >= 2")
    half = Fraction(1, 2) if exact else 0.5
    one = Fraction(1) if exact else 1.0
    zero = Fraction(0) if exact else 0.0
    model = c0_model(dim)
    stages = []
    for n in range(1, dim // 2 + 2):
        matrix = np.full((dim, dim), zero, dtype=object if exact else float)
        kept = 2 * (n - 1)
        for i in range(min(kept, dim)):
            matrix[i, i] = one
        for start in range(kept, dim, 2):
            matrix[start:start + 2, start:start + 2] = half
        stages.append(Projection(matrix, ProjectionKind.CONDITIONAL_EXPECTATION))
    # pairwise constant, so every stage fixes it; pair j carries 4**-j
    unit = [one / 4 ** (i // 2) for i in range(dim)]
    x0 = Element(np.array(unit, dtype=object) if exact else np.array(unit, dtype=float), model)
    x0star = Functional(np.array([Fraction(1, dim)] * dim, dtype=object) if exact else np.full(dim, 1.0 / dim))
    return Filtration(tuple(stages), model, BistochasticWitness(x0, x0star))


def _block_diag(blocks: Sequence[np.ndarray]) -> np.ndarray:
    size = sum(b.shape[0] for b in blocks)
    exact = any(is_exact(b) for b in blocks)
    out = np.zeros((size, size), dtype=object if exact else float)
    if exact:
        out[:, :] = Fraction(0)
    offset = 0
    for b in blocks:
        n = b.shape[0]
        out[offset:offset + n, offset:offset + n] = b
        offset += n
    return out


def _kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    exact = is_exact(a) or is_exact(b)
    rows, cols = a.shape[0] * b.shape[0], a.shape[1] * b.shape[1]
    out = np.empty((rows, cols), dtype=object if exact else float)
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            out[i * b.shape[0]:(i + 1) * b.shape[0], j * b.shape[1]:(j + 1) * b.shape[1]] = a[i, j] * b
    return out


def lift_chain(chain: PartitionChain, fiber: LatticeModel, x0: Optional[Element] = None,
               x0star: Optional[Functional] = None) -> Filtration:
    """Classical filtration on L1(Omega; F): E_t (x) I_F, witness f0 = x0, g0 = x0*."""
    model = product_model(list(chain.sample_weights), fiber)
    identity = np.eye(fiber.dim)
    if is_exact(chain.sample_weights):
        identity = np.array([[Fraction(int(i == j)) for j in range(fiber.dim)] for i in range(fiber.dim)],
                            dtype=object)
    stages = tuple(Projection(_kron(conditional_expectation(chain, t).matrix, identity),
                              ProjectionKind.CONDITIONAL_EXPECTATION) for t in range(len(chain)))
    return Filtration(stages, model, _product_witness(chain.sample_weights, fiber, x0, x0star, model))


def lift_fiber_filtration(atom_weights: Sequence[Any], fiber_filtration: Filtration) -> Filtration:
    """I_Omega (x) E_n: a fiber filtration acting on every atom."""
    fiber = fiber_filtration.model
    model = product_model(list(atom_weights), fiber)
    atoms = len(atom_weights)
    stages = tuple(Projection(_block_diag([s.matrix] * atoms), s.kind) for s in fiber_filtration.stages)
    fiber_witness = fiber_filtration.bistochastic_witness
    x0 = fiber_witness.x0 if fiber_witness else None
    x0star = fiber_witness.x0star if fiber_witness else None
    return Filtration(stages, model, _product_witness(to_vector(atom_weights), fiber, x0, x0star, model))


def _product_witness(mu: np.ndarray, fiber: LatticeModel, x0: Optional[Element],
                     x0star: Optional[Functional], model: LatticeModel) -> BistochasticWitness:
    exact = is_exact(mu)
    fiber_unit = x0.coords if x0 is not None else ones(fiber, exact=exact).coords
    fiber_functional = x0star.weights if x0star is not None else fiber.weight_vector
    if exact:
        fiber_unit = np.array([Fraction(v) for v in fiber_unit], dtype=object)
        fiber_functional = np.array([Fraction(w) for w in fiber_functional], dtype=object)
    f0 = np.concatenate([fiber_unit for _ in mu])
    g0 = np.concatenate([m * fiber_functional for m in mu])
    return BistochasticWitness(Element(f0, model), Functional(g0))


# ---------------------------------------------------------
# Double condition diagnostics
# ---------------------------------------------------------

@dataclass
class DoubleConditionReport:
    """Strict positivity of E and E*, fixed weak unit / strict functional, and their agreement."""
    strictly_positive: bool
    adjoint_strictly_positive: bool
    fixed_weak_unit: Optional[List[float]]
    fixed_strict_functional: Optional[List[float]]
    equivalence_holds: bool
    basis_check_agrees: bool
    notes: List[str] = field(default_factory=list)

    @property
    def has_fixed_pair(self) -> bool:
        return self.fixed_weak_unit is not None and self.fixed_strict_functional is not None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "strictly_positive": self.strictly_positive,
            "adjoint_strictly_positive": self.adjoint_strictly_positive,
            "fixed_weak_unit": self.fixed_weak_unit,
            "fixed_strict_functional": self.fixed_strict_functional,
            "equivalence_holds": self.equivalence_holds,
            "basis_check_agrees": self.basis_check_agrees,
            "notes": self.notes,
        }


def strictly_positive_fixed_vector(matrix: np.ndarray, threshold: Optional[float] = None) -> Optional[np.ndarray]:
    """A strictly positive x with Mx = x, normalized to sum 1, or None.

    M must be idempotent, so its fixed points are exactly its range.
    Maximizes min_i x_i over that range intersected with the simplex;
    absence is declared when the optimum is <= threshold.
    """
    threshold = load_settings().fixed_point_threshold if threshold is None else threshold
    dense = matrix.astype(float)
    dim = dense.shape[0]
    basis = orth(dense)
    if basis.shape[1] == 0:
        return None
    r = basis.shape[1]
    # variables: coefficients c (free), t; maximize t
    objective = np.zeros(r + 1)
    objective[-1] = -1.0
    a_ub = np.hstack([-basis, np.ones((dim, 1))])
    b_ub = np.zeros(dim)
    a_eq = np.hstack([basis.sum(axis=0, keepdims=True), np.zeros((1, 1))])
    b_eq = np.ones(1)
    bounds = [(None, None)] * r + [(None, 1.0)]
    result = linprog(objective, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if not result.success or result.x[-1] <= threshold:
        return None
    return basis @ result.x[:r]


def _kills_a_basis_vector(stage: Projection, model: Optional[LatticeModel]) -> Tuple[bool, bool]:
    """Apply E to every e_j and E* to every e_i*; report whether some image is zero."""
    model = l1_model(stage.dim) if model is None else model
    kills = adjoint_kills = False
    for j in range(stage.dim):
        e_j = np.zeros(stage.dim)
        e_j[j] = 1.0
        if not np.any(stage.apply(Element(e_j, model)).coords != 0):
            kills = True
        if not np.any(stage.adjoint(Functional(e_j)).weights != 0):
            adjoint_kills = True
    return kills, adjoint_kills


def double_condition_diagnostics(stage: Projection, model: Optional[LatticeModel] = None) -> DoubleConditionReport:
    """Strict positivity of E and E* versus a fixed strictly positive pair: either both hold or neither does."""
    if model is not None and model.dim != stage.dim:
        raise ModelMismatchError(f"projection dim {stage.dim} != model dim {model.dim}")
    a = stage.matrix
    # E x = 0 for some x > 0 iff E has a zero column; E* likewise with zero rows.
    strictly_positive = bool(np.all(np.any(a != 0, axis=0)))
    adjoint_positive = bool(np.all(np.any(a != 0, axis=1)))
    basis_kills, adjoint_basis_kills = _kills_a_basis_vector(stage, model)
    basis_check_agrees = (strictly_positive != basis_kills) and (adjoint_positive != adjoint_basis_kills)

    unit = strictly_positive_fixed_vector(a)
    functional = strictly_positive_fixed_vector(a.T)
    fixed_pair = unit is not None and functional is not None
    report = DoubleConditionReport(
        strictly_positive=strictly_positive,
        adjoint_strictly_positive=adjoint_positive,
        fixed_weak_unit=[float(v) for v in unit] if unit is not None else None,
        fixed_strict_functional=[float(v) for v in functional] if functional is not None else None,
        equivalence_holds=fixed_pair == (strictly_positive and adjoint_positive),
        basis_check_agrees=basis_check_agrees,
        notes=["order continuity of E is automatic in finite dimension (vacuous)"],
    )
    if not report.equivalence_holds:
        logger.warning("⚠️ Fixed-pair search disagrees with the strict-positivity pair")
    return report


# ---------------------------------------------------------
# Conditional-expectation recovery
# ---------------------------------------------------------

def recover_partition(stage: Projection, mu: Optional[Sequence[Any]] = None) -> Optional[Partition]:
    """The partition whose conditional expectation equals the matrix, if any.

    Blocks are the connected components of the sparsity pattern; the matrix
    must then average within blocks with weights proportional to mu (or to
    its own rows when mu is not given).
    """
    a = stage.matrix
    dim = stage.dim
    linked = (a != 0) | (a.T != 0)
    owner = [-1] * dim
    blocks: List[Tuple[int, ...]] = []
    for start in range(dim):
        if owner[start] >= 0:
            continue
        stack, members = [start], []
        owner[start] = len(blocks)
        while stack:
            i = stack.pop()
            members.append(i)
            for j in np.nonzero(linked[i])[0]:
                if owner[j] < 0:
                    owner[j] = len(blocks)
                    stack.append(int(j))
        blocks.append(tuple(sorted(members)))

    weights = to_vector(mu) if mu is not None else None
    tol = stage.tolerance
    for block in blocks:
        idx = list(block)
        sub = a[np.ix_(idx, idx)]
        local = weights[idx] if weights is not None else sub[0]
        mass = np.sum(local)
        if mass <= 0:
            return None
        expected = np.tile(local / mass, (len(idx), 1))
        if _max_abs(sub - expected) > tol:
            return None
    return tuple(blocks)
