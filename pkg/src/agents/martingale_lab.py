"""
Martingale Lab - (sub)martingales over finite filtrations

This orchestrator ties the lattice, convergence and filtration tools
together into experiments. Every experiment returns an ExperimentReport:
named profiles, named scalar statistics and boolean verdicts, each verdict
pointing at the profile or statistic that supports it.

Experiments:
1. verify_process / closed_martingale / random_submartingale: build and check traces
2. doob_experiment: bounded positive part => uo-Cauchy
3. kb_vs_c0_experiment: partial sums in L1 vs c0 truncations
4. weaksub_check / positive_part_convergence: limits dominate, positive parts converge
5. norm_convergence_experiment: closed martingales converge in norm with an order-bound witness
6. bochner_experiment: the same on L1(Omega; F), atom by atom
7. schur_contrast_experiment: the basis in l1 vs l2 truncations

Limits are taken in the finite-dimensional surrogate sense: a subsequence
converging in norm stands in for weak convergence, and a finite filtration
is extended stationarily (E_n = E_T for n > T) when a profile needs the
stage after the last one.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.models.al_representation import ALView, al_norm
from src.models.lattice_core import (
    Element,
    Functional,
    LatticeModel,
    SpaceTag,
    c0_model,
    harmonic_unit,
    in_tagged_space,
    is_weak_unit,
    l1_model,
    lp_model,
    norm,
    ones,
    to_scalar,
    to_vector,
)
from src.tools.convergence import (
    ConvergenceProfile,
    SequenceFamily,
    almost_order_bounded,
    norm_cauchy_profile,
    norm_profile,
    order_profile,
    schur_contrast,
    uo_cauchy_profile,
    uo_profile,
)
from src.tools.filtration import (
    Filtration,
    PartitionChain,
    block_averaging_filtration,
    chain_to_filtration,
    double_condition_diagnostics,
    dyadic_chain,
    lift_chain,
    lift_fiber_filtration,
    operator_norm,
    validate_filtration,
)
from src.tools.generators import nonnegative_increments, random_element
from src.tools.polya_urn import PolyaUrnOracle
from src.utils.config_parser import ExperimentConfig, GeneratedFiltrationSpec, ModelSpec, load_settings
from src.utils.errors import (
    ConfigError,
    HypothesisError,
    LabError,
    ModelMismatchError,
    PreconditionError,
    StageAlignmentError,
    StructuralError,
)
from src.utils.fixtures import FixtureGallery

logger = logging.getLogger(__name__)

SURROGATE_NOTE = "finite-dim surrogate: norm convergence of a subsequence stands in for weak convergence"


class ProcessKind(Enum):
    MARTINGALE = "martingale"
    SUBMARTINGALE = "submartingale"
    NONE = "none"


# ---------------------------------------------------------
# Traces and reports
# ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ProcessTrace:
    """Values z_1..z_T aligned with the stages E_1..E_T of a filtration."""
    filtration: Filtration
    values: Tuple[Element, ...]
    kind_claim: ProcessKind = ProcessKind.NONE

    def __post_init__(self):
        values = tuple(self.values)
        object.__setattr__(self, "values", values)
        if len(values) != len(self.filtration):
            raise StageAlignmentError(
                f"trace has {len(values)} values but the filtration has {len(self.filtration)} stages"
            )
        for n, (stage, z) in enumerate(zip(self.filtration.stages, values), start=1):
            if z.model != self.filtration.model:
                raise ModelMismatchError(f"z_{n} does not live on the filtration's model")
            if not stage.fixes(z):
                raise StageAlignmentError(f"z_{n} is not in the range of E_{n}")

    @property
    def model(self) -> LatticeModel:
        return self.filtration.model

    @property
    def family(self) -> SequenceFamily:
        return SequenceFamily(self.values, self.model)

    def extended(self) -> SequenceFamily:
        """The trace followed by its stationary continuation z_{T+1} = z_T."""
        return SequenceFamily(self.values + (self.values[-1],), self.model)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class ProcessVerification:
    is_martingale: bool
    is_submartingale: bool
    max_violation: float
    submartingale_violation: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "is_martingale": self.is_martingale,
            "is_submartingale": self.is_submartingale,
            "max_violation": self.max_violation,
            "submartingale_violation": self.submartingale_violation,
        }


@dataclass
class ExperimentReport:
    """Named profiles, scalar statistics and verdicts of one experiment."""
    name: str
    profiles: Dict[str, ConvergenceProfile] = field(default_factory=dict)
    scalar_stats: Dict[str, float] = field(default_factory=dict)
    verdicts: Dict[str, bool] = field(default_factory=dict)
    evidence: Dict[str, str] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)
    finite_dim_surrogate: bool = False
    details: Dict[str, Any] = field(default_factory=dict)

    def verdict(self, name: str, value: bool, evidence: str) -> None:
        """Record a verdict backed by a profile or statistic already in the report."""
        if evidence not in self.profiles and evidence not in self.scalar_stats:
            raise StructuralError(f"verdict '{name}' cites unknown evidence '{evidence}'")
        self.verdicts[name] = bool(value)
        self.evidence[name] = evidence

    def note(self, message: str) -> None:
        if message not in self.notes:
            self.notes.append(message)

    def absorb(self, other: "ExperimentReport", prefix: str) -> None:
        """Pull another report's results in under `prefix.`."""
        for key, profile in other.profiles.items():
            self.profiles[f"{prefix}.{key}"] = profile
        for key, value in other.scalar_stats.items():
            self.scalar_stats[f"{prefix}.{key}"] = value
        for key, value in other.verdicts.items():
            self.verdicts[f"{prefix}.{key}"] = value
            self.evidence[f"{prefix}.{key}"] = f"{prefix}.{other.evidence[key]}"
        for message in other.notes:
            self.note(message)
        self.finite_dim_surrogate = self.finite_dim_surrogate or other.finite_dim_surrogate

    @property
    def all_passed(self) -> bool:
        return all(self.verdicts.values())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "profiles": {k: self.profiles[k].to_dict() for k in sorted(self.profiles)},
            "scalar_stats": {k: self.scalar_stats[k] for k in sorted(self.scalar_stats)},
            "verdicts": {k: self.verdicts[k] for k in sorted(self.verdicts)},
            "evidence": {k: self.evidence[k] for k in sorted(self.evidence)},
            "notes": list(self.notes),
            "finite_dim_surrogate": self.finite_dim_surrogate,
            "details": self.details,
        }

    def csv_rows(self) -> List[Tuple[str, str, Any]]:
        """Flat (experiment, metric, value) rows; every value also sits in to_dict()."""
        rows: List[Tuple[str, str, Any]] = []
        for key in sorted(self.scalar_stats):
            rows.append((self.name, f"scalar_stats.{key}", self.scalar_stats[key]))
        for key in sorted(self.verdicts):
            rows.append((self.name, f"verdicts.{key}", self.verdicts[key]))
        return rows


# ---------------------------------------------------------
# Building and verifying traces
# ---------------------------------------------------------

def verify_process(trace: ProcessTrace, tol: Optional[float] = None) -> ProcessVerification:
    """Check E_n z_m against z_n for every m >= n."""
    tol = load_settings().projection_tolerance if tol is None else tol
    worst = 0.0
    worst_drop = 0.0
    for n, stage in enumerate(trace.filtration.stages):
        z_n = trace.values[n].coords
        for m in range(n, len(trace)):
            gap = stage.matrix @ trace.values[m].coords - z_n
            worst = max(worst, float(np.max(np.abs(gap))))
            worst_drop = max(worst_drop, float(-np.min(gap)))
    return ProcessVerification(
        is_martingale=worst <= tol,
        is_submartingale=worst_drop <= tol,
        max_violation=worst,
        submartingale_violation=max(worst_drop, 0.0),
    )


def closed_martingale(filtration: Filtration, x: Element) -> ProcessTrace:
    """z_n = E_n x."""
    if x.model != filtration.model:
        raise ModelMismatchError("generator does not live on the filtration's model")
    values = tuple(stage.apply(x) for stage in filtration.stages)
    return ProcessTrace(filtration, values, ProcessKind.MARTINGALE)


def random_submartingale(filtration: Filtration, x: Element, rng: np.random.Generator,
                         scale: float = 1.0) -> ProcessTrace:
    """z_n = E_n x + sum_{j<=n} E_j r_j with random r_j >= 0.

    Each E_j r_j is a nonnegative element fixed by E_j, so E_n z_m - z_n =
    sum_{n<j<=m} E_n r_j >= 0.
    """
    closed = closed_martingale(filtration, x)
    increments = nonnegative_increments(filtration.model.dim, len(filtration), rng, scale)
    drift = np.zeros(filtration.model.dim)
    values = []
    for stage, z, r in zip(filtration.stages, closed.values, increments):
        drift = drift + stage.matrix.astype(float) @ r
        values.append(Element(z.coords.astype(float) + drift, filtration.model))
    return ProcessTrace(filtration, tuple(values), ProcessKind.SUBMARTINGALE)


def _require_double_condition(filtration: Filtration, x0: Element, x0star: Functional) -> None:
    first = filtration.stages[0]
    if not first.fixes(x0):
        raise HypothesisError("double condition fails: E_1 does not fix the weak unit x0")
    if not first.adjoint_fixes(x0star):
        raise HypothesisError("double condition fails: E_1* does not fix the functional x0*")


def _tagged_limit_note(report: ExperimentReport, limit: Element, cauchy: ConvergenceProfile) -> bool:
    accepted = in_tagged_space(limit)
    if cauchy.converged and not accepted:
        report.note("uo-Cauchy, not uo-convergent in tagged space")
    return accepted


# ---------------------------------------------------------
# Experiments
# ---------------------------------------------------------

def doob_experiment(trace: ProcessTrace, view: ALView, tolerance: Optional[float] = None,
                    name: str = "doob", bound: Optional[float] = None) -> ExperimentReport:
    """sup_n x0*(z_n+) < inf for a submartingale under the double condition => (z_n) is uo-Cauchy.

    The positive part counts as bounded when sup_n x0*(z_n+) stays below
    `bound`, by default the L-norm x0*(|z_T|) of the last value. The
    Cauchy profile runs over the stationary continuation of the trace.
    """
    if view.base != trace.model:
        raise ModelMismatchError("view and trace live on different models")
    _require_double_condition(trace.filtration, view.x0, view.x0star)
    check = verify_process(trace)
    if not check.is_submartingale:
        raise PreconditionError(
            f"trace is not a submartingale (violation {check.submartingale_violation:.3g})"
        )
    logger.info(f"🧪 Doob experiment '{name}' over {len(trace)} stages")

    report = ExperimentReport(name=name)
    levels = [float(view.x0star.apply(z)) for z in trace.values]
    positive = [float(view.x0star.apply(z.pos())) for z in trace.values]
    sup_positive = max(positive)
    slack = load_settings().relative_tolerance * max(1.0, abs(sup_positive))
    chain_holds = all(a <= b + slack for a, b in zip(levels, levels[1:])) and levels[-1] <= sup_positive + slack
    if bound is None:
        bound = float(al_norm(view, trace.values[-1]))
    bounded = sup_positive <= bound + slack

    report.scalar_stats.update({
        "sup_x0star_positive_part": sup_positive,
        "positive_part_bound": bound,
        "x0star_first": levels[0],
        "x0star_last": levels[-1],
        "max_violation": check.max_violation,
    })
    report.details["x0star_levels"] = levels
    cauchy = uo_cauchy_profile(trace.extended(), view.x0, tolerance)
    report.profiles["uo_cauchy"] = cauchy

    report.verdict("submartingale", check.is_submartingale, "max_violation")
    report.verdict("martingale", check.is_martingale, "max_violation")
    report.verdict("bounded_positive_part", bounded, "positive_part_bound")
    report.verdict("bound_chain", chain_holds, "x0star_last")
    report.verdict("uo_cauchy", cauchy.converged, "uo_cauchy")
    report.verdict("bounded_implies_uo_cauchy", cauchy.converged or not bounded, "uo_cauchy")
    if not bounded:
        report.note(f"sup x0*(z_n+) = {sup_positive:.6g} exceeds the bound {bound:.6g}")
    accepted = _tagged_limit_note(report, trace.values[-1], report.profiles["uo_cauchy"])
    report.verdict("limit_in_tagged_space", accepted, "uo_cauchy")
    return report


def _norm_bounded(family: SequenceFamily, tolerance: float) -> bool:
    """Norms stop growing: the second half of the horizon adds at most tolerance * sup ||x_n||."""
    norms = [float(norm(t)) for t in family]
    half = len(norms) // 2
    early, late = max(norms[:half]), max(norms)
    return late - early <= tolerance * max(1.0, late)


def kb_vs_c0_experiment(horizon: int, tolerance: Optional[float] = None,
                        name: str = "kb_vs_c0") -> ExperimentReport:
    """Partial sums of the basis in L1 and c0 truncations of dimension `horizon`."""
    if horizon < 4:
        raise PreconditionError(f"kb_vs_c0 needs horizon >= 4, got {horizon}")
    base = load_settings().profile_tolerance if tolerance is None else tolerance
    tol = max(base, 1.0 / horizon)
    report = ExperimentReport(name=name)
    logger.info(f"🧪 KB vs c0 at horizon {horizon} (tolerance {tol:g})")

    for label, model in (("c0", c0_model(horizon)), ("l1", l1_model(horizon))):
        sums = SequenceFamily.from_rows(model, [[1.0] * n + [0.0] * (horizon - n) for n in range(1, horizon + 1)])
        unit = harmonic_unit(model)
        limit = ones(model)
        profile = uo_cauchy_profile(sums, unit, tol)
        bounded = _norm_bounded(sums, tol)
        accepted = in_tagged_space(limit) and bounded
        report.profiles[f"{label}.uo_cauchy"] = profile
        report.profiles[f"{label}.uo"] = uo_profile(sums, limit, unit, tol)
        report.scalar_stats[f"{label}.sup_norm"] = max(float(norm(t)) for t in sums)
        report.verdict(f"{label}.uo_cauchy", profile.converged, f"{label}.uo_cauchy")
        report.verdict(f"{label}.norm_bounded", bounded, f"{label}.sup_norm")
        report.verdict(f"{label}.limit_accepted", accepted, f"{label}.uo")
        if not in_tagged_space(limit):
            report.note(f"{label}: all-ones limit fails the c0 decay test")
        if not bounded:
            report.note(f"{label}: partial sums are not norm bounded")

    model = l1_model(horizon)
    u = ones(model)
    family = SequenceFamily(tuple(u * (1.0 - 2.0 ** -n) for n in range(1, horizon + 1)), model)
    bounded_profile = uo_profile(family, u, harmonic_unit(model), tol)
    report.profiles["bounded.uo"] = bounded_profile
    report.scalar_stats["bounded.sup_norm"] = max(float(norm(t)) for t in family)
    report.verdict("bounded.uo_convergent", bounded_profile.converged, "bounded.uo")
    report.verdict("bounded.limit_accepted",
                   in_tagged_space(u) and _norm_bounded(family, tol), "bounded.sup_norm")
    return report


def weaksub_check(trace: ProcessTrace, x: Element, tol: Optional[float] = None) -> bool:
    """z_n <= E_n x for all n (equality for martingales)."""
    tol = load_settings().projection_tolerance if tol is None else tol
    return weaksub_gap(trace, x) <= tol


def weaksub_gap(trace: ProcessTrace, x: Element) -> float:
    """Largest violation of z_n <= E_n x (of z_n = E_n x for martingales)."""
    if x.model != trace.model:
        raise ModelMismatchError("limit does not live on the trace's model")
    worst = 0.0
    for stage, z in zip(trace.filtration.stages, trace.values):
        gap = stage.matrix @ x.coords - z.coords
        if trace.kind_claim == ProcessKind.MARTINGALE:
            worst = max(worst, float(np.max(np.abs(gap))))
        else:
            worst = max(worst, float(-np.min(gap)))
    return worst


def _require_bistochastic(filtration: Filtration) -> None:
    witness = filtration.bistochastic_witness
    if witness is None:
        raise HypothesisError("filtration carries no (x0, x0*) witness")
    _require_double_condition(filtration, witness.x0, witness.x0star)


def positive_part_convergence(trace: ProcessTrace, x: Element, tolerance: Optional[float] = None,
                              name: str = "positive_part") -> ExperimentReport:
    """(z_n+) converges to x+ in order and in norm when z_n <= E_n x.

    A trace that is not dominated by E_n x still gets its profiles, with
    the `weaksub` verdict false.
    """
    _require_bistochastic(trace.filtration)
    gap = weaksub_gap(trace, x)
    dominated = gap <= load_settings().projection_tolerance
    logger.info(f"🧪 Positive-part convergence '{name}'")

    report = ExperimentReport(name=name, finite_dim_surrogate=True)
    report.note(SURROGATE_NOTE)
    x_pos = x.pos()
    positives = trace.extended().map(lambda z: z.pos())
    report.profiles["order"] = order_profile(positives, x_pos, tolerance)
    report.profiles["norm"] = norm_profile(positives, x_pos, tolerance)

    identities = True
    tol = trace.model.tolerance
    for z in trace.values:
        zp = z.pos()
        if not (zp.join(x_pos) - zp.meet(x_pos)).equals((zp - x_pos).abs(), tol):
            identities = False
        if not zp.join(x_pos).equals((zp - x_pos).pos() + x_pos, tol):
            identities = False
    report.scalar_stats["final_residual"] = float(norm(trace.values[-1].pos() - x_pos))
    report.scalar_stats["identities_hold"] = 1.0 if identities else 0.0
    report.scalar_stats["weaksub_gap"] = gap
    report.verdict("weaksub", dominated, "weaksub_gap")
    if not dominated:
        report.note(f"z_n exceeds E_n x by {gap:.3g}: convergence to x+ is not expected")
    report.verdict("order_convergence", report.profiles["order"].converged, "order")
    report.verdict("norm_convergence", report.profiles["norm"].converged, "norm")
    report.verdict("identities", identities, "identities_hold")
    return report


def _order_bound_multiple(x: Element, x0: Element, eps: float) -> int:
    """Smallest k >= 1 with ||(|x| - k x0)+|| <= eps."""
    k = 1
    while float(norm((x.abs() - x0 * k).pos())) > eps:
        k += 1
    return k


def norm_convergence_experiment(trace: ProcessTrace, x: Element, eps: float = 0.05,
                                tolerance: Optional[float] = None,
                                name: str = "norm_convergence") -> ExperimentReport:
    """A closed martingale E_n x converges in norm; its values sit in [-k x0, k x0] + C eps B.

    (|E_n x| - k x0)+ <= E_n (|x| - k x0)+ because E_n fixes x0, so the
    order-bound witness k x0 works with slack C eps, C = max_n ||E_n||.
    """
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    if trace.kind_claim != ProcessKind.MARTINGALE or not weaksub_check(trace, x):
        raise PreconditionError("norm_convergence_experiment needs the closed martingale of x")
    _require_bistochastic(trace.filtration)
    x0 = trace.filtration.bistochastic_witness.x0
    logger.info(f"🧪 Norm convergence '{name}' (eps {eps:g})")

    report = ExperimentReport(name=name)
    bound = max(operator_norm(stage, trace.model) for stage in trace.filtration.stages)
    k = _order_bound_multiple(x, x0, eps)
    slack = bound * eps + trace.model.tolerance
    certificate = almost_order_bounded(trace.family, x0 * k, slack)

    limit = trace.values[-1]
    residuals = [float(norm(z - x)) for z in trace.values]
    report.profiles["norm"] = norm_profile(trace.extended(), limit, tolerance)
    report.profiles["norm_cauchy"] = norm_cauchy_profile(trace.family, tolerance)
    report.profiles["uo"] = uo_profile(trace.extended(), limit, x0, tolerance)
    report.scalar_stats.update({
        "bounded_const": bound,
        "witness_multiple": float(k),
        "aob_residual": certificate.sup_residual,
        "final_residual": residuals[-1],
    })
    report.details["residuals"] = residuals
    report.verdict("aob_certified", certificate.holds, "aob_residual")
    report.verdict("norm_convergence", report.profiles["norm"].converged, "norm")
    report.verdict("uo_convergence", report.profiles["uo"].converged, "uo")
    report.verdict("limit_is_generator", residuals[-1] <= trace.model.tolerance, "final_residual")
    return report


def bochner_experiment(chain: PartitionChain, fiber: LatticeModel, trace: ProcessTrace,
                       tolerance: Optional[float] = None, name: str = "bochner") -> ExperimentReport:
    """Doob on L1(Omega; F), then uo-Cauchy-ness of every path z_n(w) in the fiber."""
    model = trace.model
    if model.space_tag != SpaceTag.PRODUCT or model.fiber != fiber:
        raise ModelMismatchError("trace must live on the product model over this fiber")
    if len(model.atom_weights) != chain.dim or any(
            a != b for a, b in zip(model.atom_weights, chain.sample_weights)):
        raise ModelMismatchError("product atom weights differ from the chain's probabilities")
    witness = trace.filtration.bistochastic_witness
    if witness is None:
        raise PreconditionError("fiber weak unit missing: the filtration carries no witness")
    atoms = chain.dim
    units = witness.x0.coords.reshape(atoms, fiber.dim)
    for omega in range(atoms):
        if np.any(units[omega] < 0) or not is_weak_unit(Element(units[omega], fiber)):
            raise PreconditionError(f"fiber weak unit missing on atom {omega}")
    logger.info(f"🧪 Bochner experiment '{name}' over {atoms} atoms")

    report = ExperimentReport(name=name)
    view = ALView(model, witness.x0star, witness.x0)
    report.absorb(doob_experiment(trace, view, tolerance, name), "doob")

    failed_mass = 0.0
    rejected = 0
    failing: List[int] = []
    for omega in range(atoms):
        rows = [z.coords.reshape(atoms, fiber.dim)[omega] for z in trace.extended()]
        path = SequenceFamily.from_rows(fiber, rows)
        profile = uo_cauchy_profile(path, Element(units[omega], fiber), tolerance)
        report.profiles[f"atom_{omega}.uo_cauchy"] = profile
        if not profile.converged:
            failed_mass += float(chain.sample_weights[omega])
            failing.append(omega)
        if not in_tagged_space(path[-1]):
            rejected += 1
    report.scalar_stats["failure_measure"] = failed_mass
    report.scalar_stats["atoms_limit_rejected"] = float(rejected)
    report.details["failing_atoms"] = failing
    report.verdict("almost_surely_uo_cauchy", failed_mass == 0.0, "failure_measure")
    report.verdict("atom_limits_accepted", rejected == 0, "atoms_limit_rejected")
    if rejected:
        report.note(f"{rejected} atom limits fall outside the fiber's tagged space")
    return report


def schur_contrast_experiment(horizon: int, tolerance: Optional[float] = None,
                              name: str = "schur_contrast") -> ExperimentReport:
    """e_n in l1 and l2 truncations: only l2 yields a positive, weakly null, non-norm-null family."""
    if horizon < 4:
        raise PreconditionError(f"schur_contrast needs horizon >= 4, got {horizon}")
    base = load_settings().profile_tolerance if tolerance is None else tolerance
    tol = max(base, 1.0 / (horizon - 1))
    report = ExperimentReport(name=name)
    l1 = l1_model(horizon)
    l2 = lp_model(horizon, 2.0)
    cases = (
        ("l1", schur_contrast(l1, [Functional(np.ones(horizon))], tol)),
        ("l2", schur_contrast(l2, [Functional(harmonic_unit(l2).coords)], tol)),
    )
    for label, contrast in cases:
        report.profiles[f"{label}.uo"] = contrast.uo
        report.profiles[f"{label}.weak"] = contrast.weak
        report.profiles[f"{label}.norm"] = contrast.norm
        report.verdict(f"{label}.uo_null", contrast.uo.converged, f"{label}.uo")
        report.verdict(f"{label}.weakly_null", contrast.weak.converged, f"{label}.weak")
        report.verdict(f"{label}.schur_witness", contrast.schur_witness, f"{label}.norm")
    return report


# ---------------------------------------------------------
# Config-driven runner
# ---------------------------------------------------------

@dataclass
class RunResult:
    """A finished experiment and how it compares with the config's expectations."""
    report: ExperimentReport
    mismatches: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches


class MartingaleLab:
    """
    Builds models, filtrations and traces from an ExperimentConfig and runs
    the requested diagnostics into one ExperimentReport.
    """

    def __init__(self, seed: Optional[int] = None, tolerance: Optional[float] = None,
                 horizon: Optional[int] = None, gallery: Optional[FixtureGallery] = None):
        """
        Args:
            seed: overrides the config's seed
            tolerance: overrides the config's numeric tolerance (>= 0)
            horizon: overrides the config's horizon
        """
        if tolerance is not None and tolerance < 0:
            raise ConfigError("tolerance must be >= 0", "--tolerance")
        self.seed = seed
        self.tolerance = tolerance
        self.horizon = horizon
        self.gallery = gallery or FixtureGallery()

    # --- building blocks ---
    def _numeric_tolerance(self, config: ExperimentConfig) -> float:
        return self.tolerance if self.tolerance is not None else config.tolerances.numeric

    def _build_model(self, spec: Optional[ModelSpec], config: ExperimentConfig, path: str) -> Optional[LatticeModel]:
        if spec is None:
            return None
        try:
            return LatticeModel.from_dict(spec.model_dump(), self._numeric_tolerance(config))
        except (ValueError, KeyError) as e:
            raise ConfigError(str(e), path) from e

    def _generated(self, spec: GeneratedFiltrationSpec) -> Tuple[Filtration, Optional[PartitionChain]]:
        if spec.kind == "dyadic":
            chain = dyadic_chain(spec.depth)
            return chain_to_filtration(chain), chain
        return block_averaging_filtration(spec.dim), None

    def _build_filtration(self, config: ExperimentConfig, model: Optional[LatticeModel]
                          ) -> Tuple[Optional[Filtration], Optional[PartitionChain], Optional[PolyaUrnOracle]]:
        oracle = None
        chain = None
        filtration = None
        process = config.process
        if process is not None and process.kind in ("urn", "urn_submartingale"):
            if config.filtration or config.partition_chain or config.generated_filtration:
                raise ConfigError("urn processes build their own filtration", "process.kind")
            try:
                oracle = PolyaUrnOracle(process.depth, process.red, process.black, process.reinforcement)
                chain = oracle.chain(exact=False)
                filtration = chain_to_filtration(chain)
            except LabError as e:
                raise ConfigError(str(e), "process") from e
        elif config.filtration is not None:
            if model is None:
                raise ConfigError("an explicit filtration needs a model", "model")
            try:
                filtration = Filtration.from_dict(config.filtration.model_dump(), model)
            except LabError as e:
                raise ConfigError(str(e), "filtration") from e
        elif config.partition_chain is not None:
            try:
                chain = PartitionChain.from_dict(config.partition_chain.model_dump())
                filtration = chain_to_filtration(chain)
            except LabError as e:
                raise ConfigError(str(e), "partition_chain") from e
        elif config.generated_filtration is not None:
            filtration, chain = self._generated(config.generated_filtration)

        if config.fiber is not None:
            fiber = self._build_model(config.fiber, config, "fiber")
            if chain is None:
                raise ConfigError("a fiber needs a partition chain for the atoms", "fiber")
            if config.fiber_filtration is not None:
                fiber_filtration, _ = self._generated(config.fiber_filtration)
                if fiber_filtration.model.dim != fiber.dim:
                    raise ConfigError("fiber filtration dim differs from the fiber model", "fiber_filtration")
            try:
                if config.fiber_filtration is not None:
                    filtration = lift_fiber_filtration(list(chain.sample_weights), fiber_filtration)
                else:
                    filtration = lift_chain(chain, fiber)
            except LabError as e:
                raise ConfigError(str(e), "fiber") from e
        return filtration, chain, oracle

    def _build_trace(self, config: ExperimentConfig, filtration: Filtration, oracle: Optional[PolyaUrnOracle],
                     rng: np.random.Generator) -> Tuple[ProcessTrace, Optional[Element]]:
        """The trace and, for closed martingales, its generator."""
        spec = config.process
        model = filtration.model
        if spec.kind == "closed_martingale":
            x = Element(to_vector(spec.x), model)
            return closed_martingale(filtration, x), x
        if spec.kind == "block_alternating":
            x = Element(np.array([(-1.0) ** i for i in range(model.dim)]), model)
            return closed_martingale(filtration, x), x
        if spec.kind == "random_closed_martingale":
            x = random_element(model, rng)
            return closed_martingale(filtration, x), x
        if spec.kind == "random_submartingale":
            return random_submartingale(filtration, random_element(model, rng), rng), None
        if spec.kind == "urn":
            rows = oracle.proportion_trace()
            return ProcessTrace(filtration, tuple(Element(r.astype(float), model) for r in rows),
                                ProcessKind.MARTINGALE), None
        if spec.kind == "urn_submartingale":
            drift = Fraction(to_scalar(spec.drift)) if spec.drift is not None else Fraction(1, 100)
            rows = oracle.submartingale_trace(drift)
            return ProcessTrace(filtration, tuple(Element(r.astype(float), model) for r in rows),
                                ProcessKind.SUBMARTINGALE), None
        try:
            values = tuple(Element(to_vector(row), model) for row in spec.values)
            return ProcessTrace(filtration, values, ProcessKind.NONE), None
        except LabError as e:
            raise ConfigError(str(e), "process.values") from e

    def _view(self, config: ExperimentConfig, filtration: Filtration) -> ALView:
        if config.al_view is not None:
            x0 = Element(to_vector(config.al_view.x0), filtration.model)
            return ALView(filtration.model, Functional(to_vector(config.al_view.x0star)), x0)
        witness = filtration.bistochastic_witness
        if witness is None:
            raise HypothesisError("no (x0, x0*) pair: give al_view or a filtration witness")
        return ALView(filtration.model, witness.x0star, witness.x0)

    # --- diagnostics ---
    def _diagnose(self, diagnostic: str, report: ExperimentReport, context: Dict[str, Any],
                  config: ExperimentConfig) -> None:
        tol = config.tolerances.profile
        horizon = self.horizon or config.horizon
        filtration: Optional[Filtration] = context.get("filtration")
        trace: Optional[ProcessTrace] = context.get("trace")

        if diagnostic == "kb_vs_c0":
            report.absorb(kb_vs_c0_experiment(horizon, tol), "kb_vs_c0")
            return
        if diagnostic == "schur_contrast":
            report.absorb(schur_contrast_experiment(horizon, tol), "schur")
            return
        if filtration is None:
            raise ConfigError(f"diagnostic '{diagnostic}' needs a filtration", "diagnostics")
        if diagnostic == "validate_filtration":
            result = validate_filtration(filtration)
            report.details["filtration"] = result.to_dict()
            report.scalar_stats["filtration.bounded_const"] = result.bounded_const
            report.scalar_stats["filtration.failed_checks"] = float(result.failed_checks)
            report.verdict("filtration.compatible", result.compatible, "filtration.failed_checks")
            report.verdict("filtration.bistochastic", result.bistochastic, "filtration.failed_checks")
            report.verdict("filtration.bounded_const_one", abs(result.bounded_const - 1) <= 1e-9,
                           "filtration.bounded_const")
            return
        if diagnostic == "double_condition":
            result = double_condition_diagnostics(filtration.stages[0], filtration.model)
            report.details["double_condition"] = result.to_dict()
            report.scalar_stats["double_condition.fixed_pair"] = 1.0 if result.has_fixed_pair else 0.0
            for key in ("strictly_positive", "adjoint_strictly_positive", "equivalence_holds"):
                report.verdict(f"double_condition.{key}", getattr(result, key), "double_condition.fixed_pair")
            report.verdict("double_condition.fixed_pair", result.has_fixed_pair, "double_condition.fixed_pair")
            return

        if trace is None:
            raise ConfigError(f"diagnostic '{diagnostic}' needs a process", "process")
        limit = context["generator"] if context.get("generator") is not None else trace.values[-1]
        if diagnostic == "verify_process":
            check = verify_process(trace)
            report.scalar_stats["process.max_violation"] = check.max_violation
            report.scalar_stats["process.submartingale_violation"] = check.submartingale_violation
            report.verdict("process.martingale", check.is_martingale, "process.max_violation")
            report.verdict("process.submartingale", check.is_submartingale, "process.submartingale_violation")
        elif diagnostic == "doob":
            report.absorb(doob_experiment(trace, self._view(config, filtration), tol,
                                          bound=config.positive_part_bound), "doob")
        elif diagnostic == "weaksub":
            report.scalar_stats["weaksub.limit_norm"] = float(norm(limit))
            report.verdict("weaksub.holds", weaksub_check(trace, limit), "weaksub.limit_norm")
            report.finite_dim_surrogate = True
            report.note(SURROGATE_NOTE)
        elif diagnostic == "positive_part":
            report.absorb(positive_part_convergence(trace, limit, tol), "positive_part")
        elif diagnostic == "norm_convergence":
            report.absorb(norm_convergence_experiment(trace, limit, tolerance=tol), "norm_convergence")
        elif diagnostic == "bochner":
            chain = context.get("chain")
            report.absorb(bochner_experiment(chain, filtration.model.fiber, trace, tol), "bochner")

    def run(self, config: ExperimentConfig) -> RunResult:
        """Run every diagnostic of `config`; refusals are recorded, not raised."""
        config = self.gallery.resolve(config)
        seed = self.seed if self.seed is not None else (
            config.seed if config.seed is not None else load_settings().default_seed)
        rng = np.random.default_rng(seed)
        logger.info(f"🧪 Running experiment '{config.name}' (seed {seed})")

        model = self._build_model(config.model, config, "model")
        filtration, chain, oracle = self._build_filtration(config, model)
        context: Dict[str, Any] = {"filtration": filtration, "chain": chain}
        report = ExperimentReport(name=config.name)
        report.scalar_stats["seed"] = float(seed)
        if filtration is not None and config.process is not None:
            trace, generator = self._build_trace(config, filtration, oracle, rng)
            context.update(trace=trace, generator=generator)
            if oracle is not None:
                reference = oracle.proportion_trace() if config.process.kind == "urn" else \
                    oracle.submartingale_trace(Fraction(to_scalar(config.process.drift))
                                               if config.process.drift is not None else Fraction(1, 100))
                gap = oracle.compare([z.coords for z in trace.values], reference)
                report.scalar_stats["oracle.max_gap"] = gap
                report.verdict("oracle.agrees", gap <= 1e-12, "oracle.max_gap")

        for diagnostic in config.diagnostics:
            try:
                self._diagnose(diagnostic, report, context, config)
            except ConfigError:
                raise
            except LabError as e:
                logger.warning(f"⚠️ {diagnostic} refused: {e}")
                report.scalar_stats[f"{diagnostic}.refused"] = 1.0
                report.verdict(f"{diagnostic}.ran", False, f"{diagnostic}.refused")
                report.note(f"{diagnostic}: {e}")

        mismatches = []
        for key, expected in sorted(config.expectations.items()):
            if key not in report.verdicts:
                mismatches.append(f"{key}: missing (expected {expected})")
            elif report.verdicts[key] != expected:
                mismatches.append(f"{key}: got {report.verdicts[key]}, expected {expected}")
        if mismatches:
            logger.info(f"❌ {config.name}: {len(mismatches)} expectation(s) not met")
        else:
            logger.info(f"✅ {config.name}: all expectations met")
        return RunResult(report=report, mismatches=mismatches)
