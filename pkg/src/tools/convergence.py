"""
Convergence Diagnostics - tail-supremum profiles for sequences

Turns "inf_k sup_{n>=k} |x_n - x| = 0" into a finite, monotone profile
c_1 >= c_2 >= ... >= c_{H-1} over a horizon of H terms, and classifies it:

1. Order / uo / un convergence against a candidate limit
2. Order / uo / norm Cauchy-ness (doubly indexed tails)
3. Almost order boundedness certificates and the K-truncation witness search
4. Fatou-type norm check and the norm-convergence certificates built on them

A verdict is three-valued: CONVERGED when the last value is within
tolerance, INCONCLUSIVE when it plateaus above tolerance only within the
last quarter of the horizon, DIVERGED otherwise.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.models.lattice_core import (
    Element,
    Functional,
    LatticeModel,
    default_unit,
    harmonic_unit,
    in_tagged_space,
    is_weak_unit,
    jsonable,
    norm,
    to_vector,
)
from src.utils.config_parser import load_settings
from src.utils.errors import ModelMismatchError, PreconditionError

logger = logging.getLogger(__name__)


class ProfileMode(Enum):
    ORDER = "order"
    UO = "uo"
    UN = "un"
    UO_CAUCHY = "uo_cauchy"
    ORDER_CAUCHY = "order_cauchy"
    NORM = "norm"
    NORM_CAUCHY = "norm_cauchy"
    BATTERY = "battery"


class Verdict(Enum):
    CONVERGED = "converged"
    DIVERGED = "diverged"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True, eq=False)
class SequenceFamily:
    """An ordered list of elements over one model (the horizon is its length)."""
    terms: Tuple[Element, ...]
    model: LatticeModel

    def __post_init__(self):
        terms = tuple(self.terms)
        object.__setattr__(self, "terms", terms)
        if len(terms) < 2:
            raise PreconditionError(f"horizon must be >= 2, got {len(terms)}")
        for n, term in enumerate(terms, start=1):
            if term.model != self.model:
                raise ModelMismatchError(f"term {n} does not live on the family's model")

    @classmethod
    def from_rows(cls, model: LatticeModel, rows: Iterable[Iterable[Any]]) -> "SequenceFamily":
        return cls(tuple(Element(to_vector(r), model) for r in rows), model)

    @property
    def horizon(self) -> int:
        return len(self.terms)

    def map(self, fn) -> "SequenceFamily":
        mapped = tuple(fn(t) for t in self.terms)
        return SequenceFamily(mapped, mapped[0].model)

    def __iter__(self):
        return iter(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __getitem__(self, index: int) -> Element:
        return self.terms[index]


@dataclass(frozen=True)
class ConvergenceProfile:
    """A non-increasing tail profile with its verdict."""
    c: Tuple[float, ...]
    mode: ProfileMode
    verdict: Verdict
    tolerance: float
    witness: Optional[Element] = None
    name: str = ""
    notes: Tuple[str, ...] = ()

    @property
    def final(self) -> float:
        return self.c[-1]

    @property
    def converged(self) -> bool:
        return self.verdict == Verdict.CONVERGED

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "name": self.name,
            "mode": self.mode.value,
            "verdict": self.verdict.value,
            "tolerance": self.tolerance,
            "c": list(self.c),
            "notes": list(self.notes),
        }
        if self.witness is not None:
            data["witness"] = [jsonable(v) for v in self.witness.coords]
        return data

    def csv_rows(self) -> List[Tuple[int, float]]:
        return [(k, value) for k, value in enumerate(self.c, start=1)]


@dataclass(frozen=True)
class AOBCertificate:
    """r = max_{x in A} ||(|x| - u)+|| and whether r <= eps."""
    holds: bool
    sup_residual: float


@dataclass(frozen=True)
class AOBWitness:
    """A K-truncated envelope that certifies almost order boundedness."""
    unit: Element
    truncation: int
    residual: float


@dataclass(frozen=True)
class FatouResult:
    lhs: float
    liminf: float
    ok: bool


@dataclass(frozen=True)
class NormCertificate:
    """Instance check of 'almost order bounded + uo => norm' style implications."""
    hypotheses_hold: bool
    conclusion_holds: bool
    bound_holds: bool
    witness: Optional[AOBWitness]
    profiles: Dict[str, ConvergenceProfile] = field(default_factory=dict)


# ---------------------------------------------------------
# Profile construction
# ---------------------------------------------------------

def classify(c: Sequence[float], tolerance: float) -> Verdict:
    """Three-valued verdict of a non-increasing profile."""
    last = c[-1]
    if last <= tolerance:
        return Verdict.CONVERGED
    plateau_start = next(k for k, value in enumerate(c, start=1) if value <= last)
    if plateau_start >= 0.75 * len(c):
        return Verdict.INCONCLUSIVE
    return Verdict.DIVERGED


def _profile(values: Sequence[Any], mode: ProfileMode, tolerance: Optional[float],
             witness: Optional[Element] = None, name: str = "",
             notes: Tuple[str, ...] = ()) -> ConvergenceProfile:
    tol = load_settings().profile_tolerance if tolerance is None else tolerance
    c = tuple(float(v) for v in values)
    verdict = classify(c, tol)
    logger.debug(f"🔍 {mode.value} profile: final {c[-1]:.3g} -> {verdict.value}")
    return ConvergenceProfile(c=c, mode=mode, verdict=verdict, tolerance=tol,
                              witness=witness, name=name or mode.value, notes=notes)


def _tail_max(values: Sequence[Any]) -> List[Any]:
    """Reverse running maximum: out[i] = max(values[i:]), coordinatewise for vectors."""
    out = [None] * len(values)
    running = None
    for i in range(len(values) - 1, -1, -1):
        running = values[i] if running is None else np.maximum(running, values[i])
        out[i] = running
    return out


def _tail_min(values: Sequence[Any]) -> List[Any]:
    out = [None] * len(values)
    running = None
    for i in range(len(values) - 1, -1, -1):
        running = values[i] if running is None else np.minimum(running, values[i])
        out[i] = running
    return out


def _check_limit(seq: SequenceFamily, limit: Element) -> None:
    if limit.model != seq.model:
        raise ModelMismatchError("limit candidate does not live on the family's model")


def _check_unit(seq: SequenceFamily, unit: Element) -> None:
    if unit.model != seq.model:
        raise ModelMismatchError("unit does not live on the family's model")
    if not is_weak_unit(unit):
        raise PreconditionError("unit is not a weak unit (uo diagnostics need one)")


def _sup_of_tails(rows: Sequence[np.ndarray]) -> List[Any]:
    tails = _tail_max(rows)
    return [np.max(t) for t in tails[:-1]]


def order_profile(seq: SequenceFamily, limit: Element, tolerance: Optional[float] = None) -> ConvergenceProfile:
    """c_k = || sup_{n>=k} |x_n - x| ||_sup."""
    _check_limit(seq, limit)
    rows = [np.abs(t.coords - limit.coords) for t in seq]
    return _profile(_sup_of_tails(rows), ProfileMode.ORDER, tolerance, witness=limit)


def uo_profile(seq: SequenceFamily, limit: Element, unit: Optional[Element] = None,
               tolerance: Optional[float] = None) -> ConvergenceProfile:
    """c_k = || sup_{n>=k} (|x_n - x| meet u) ||_sup for a weak unit u."""
    _check_limit(seq, limit)
    unit = default_unit(seq.model) if unit is None else unit
    _check_unit(seq, unit)
    rows = [np.minimum(np.abs(t.coords - limit.coords), unit.coords) for t in seq]
    notes = () if in_tagged_space(limit) else ("limit outside tagged space",)
    return _profile(_sup_of_tails(rows), ProfileMode.UO, tolerance, witness=limit, notes=notes)


def _tail_ranges(seq: SequenceFamily) -> List[np.ndarray]:
    """sup_{n,m>=k} |x_n - x_m| coordinatewise = tail max - tail min."""
    rows = [t.coords for t in seq]
    highs, lows = _tail_max(rows), _tail_min(rows)
    return [h - l for h, l in zip(highs, lows)][:-1]


def order_cauchy_profile(seq: SequenceFamily, tolerance: Optional[float] = None) -> ConvergenceProfile:
    """c_k = || sup_{n,m>=k} |x_n - x_m| ||_sup."""
    return _profile([np.max(r) for r in _tail_ranges(seq)], ProfileMode.ORDER_CAUCHY, tolerance)


def uo_cauchy_profile(seq: SequenceFamily, unit: Optional[Element] = None,
                      tolerance: Optional[float] = None) -> ConvergenceProfile:
    """c_k = max_{n,m>=k} || |x_n - x_m| meet u ||_sup.

    Meeting with u is monotone, so the pair maximum equals the meet of the
    coordinatewise tail range with u.
    """
    unit = default_unit(seq.model) if unit is None else unit
    _check_unit(seq, unit)
    values = [np.max(np.minimum(r, unit.coords)) for r in _tail_ranges(seq)]
    return _profile(values, ProfileMode.UO_CAUCHY, tolerance, witness=unit)


def un_profile(seq: SequenceFamily, limit: Element, battery: Sequence[Element],
               tolerance: Optional[float] = None) -> ConvergenceProfile:
    """c_k = max_{y in battery} sup_{n>=k} || |x_n - x| meet y ||."""
    _check_limit(seq, limit)
    if not battery:
        raise PreconditionError("un_profile needs a nonempty battery")
    if any(not y.is_positive(0) for y in battery):
        raise PreconditionError("battery elements must be positive")
    best: Optional[List[float]] = None
    for y in battery:
        per_term = [float(norm(Element(np.minimum(np.abs(t.coords - limit.coords), y.coords), seq.model)))
                    for t in seq]
        tails = _tail_max(per_term)[:-1]
        best = tails if best is None else [max(a, b) for a, b in zip(best, tails)]
    return _profile(best, ProfileMode.UN, tolerance, witness=limit)


def norm_profile(seq: SequenceFamily, limit: Element, tolerance: Optional[float] = None) -> ConvergenceProfile:
    """c_k = sup_{n>=k} ||x_n - x||."""
    _check_limit(seq, limit)
    per_term = [float(norm(t - limit)) for t in seq]
    return _profile(_tail_max(per_term)[:-1], ProfileMode.NORM, tolerance, witness=limit)


def _pairwise_tail(seq: SequenceFamily, measure) -> List[float]:
    """c_k = max_{n,m>=k} measure(x_n, x_m), k = 1..H-1."""
    horizon = seq.horizon
    row_max = [0.0] * horizon
    for n in range(horizon):
        for m in range(n + 1, horizon):
            row_max[n] = max(row_max[n], float(measure(seq[n], seq[m])))
    return _tail_max(row_max)[:-1]


def norm_cauchy_profile(seq: SequenceFamily, tolerance: Optional[float] = None) -> ConvergenceProfile:
    """c_k = max_{n,m>=k} ||x_n - x_m||."""
    return _profile(_pairwise_tail(seq, lambda a, b: norm(a - b)), ProfileMode.NORM_CAUCHY, tolerance)


def battery_profile(seq: SequenceFamily, limit: Element, functionals: Sequence[Functional],
                    tolerance: Optional[float] = None) -> ConvergenceProfile:
    """c_k = max_f sup_{n>=k} f(|x_n - x|): a finite certificate for |sigma|(X, X*)."""
    _check_limit(seq, limit)
    if not functionals:
        raise PreconditionError("battery_profile needs at least one functional")
    per_term = [max(float(f.apply((t - limit).abs())) for f in functionals) for t in seq]
    return _profile(_tail_max(per_term)[:-1], ProfileMode.BATTERY, tolerance, witness=limit,
                    notes=("certificate-limited",))


# ---------------------------------------------------------
# Almost order boundedness
# ---------------------------------------------------------

def _as_list(family: Union[SequenceFamily, Sequence[Element]]) -> List[Element]:
    return list(family.terms) if isinstance(family, SequenceFamily) else list(family)


def almost_order_bounded(family: Union[SequenceFamily, Sequence[Element]], u: Element,
                         eps: float) -> AOBCertificate:
    """A within [-u, u] + eps B iff max_{x in A} ||(|x| - u)+|| <= eps."""
    if not u.is_positive(0):
        raise PreconditionError("u must be positive")
    if eps < 0:
        raise PreconditionError("eps must be nonnegative")
    residual = 0.0
    for x in _as_list(family):
        residual = max(residual, float(norm((x.abs() - u).pos())))
    return AOBCertificate(holds=residual <= eps, sup_residual=residual)


def aob_search(family: Union[SequenceFamily, Sequence[Element]], eps: float) -> Optional[AOBWitness]:
    """Scan K = 1..dim for the envelope sup|x| kept on its first K coordinates."""
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    members = _as_list(family)
    if not members:
        return None
    model = members[0].model
    envelope = members[0].coords * 0
    for x in members:
        envelope = np.maximum(envelope, np.abs(x.coords))
    for k in range(1, model.dim + 1):
        truncated = envelope.copy()
        truncated[k:] = 0
        candidate = Element(truncated, model)
        certificate = almost_order_bounded(members, candidate, eps)
        if certificate.holds and in_tagged_space(candidate):
            return AOBWitness(unit=candidate, truncation=k, residual=certificate.sup_residual)
    return None


# ---------------------------------------------------------
# Fatou check and norm certificates
# ---------------------------------------------------------

def finite_liminf(values: Sequence[float]) -> float:
    """Minimum over the final quarter of the horizon."""
    tail = max(1, int(np.ceil(len(values) / 4)))
    return min(values[-tail:])


def fatou_check(seq: SequenceFamily, limit: Element, unit: Optional[Element] = None,
                tolerance: Optional[float] = None, slack: Optional[float] = None) -> FatouResult:
    """||x|| <= liminf ||x_n|| for a uo-convergent family."""
    profile = uo_profile(seq, limit, unit, tolerance)
    if not profile.converged:
        raise PreconditionError(
            f"fatou_check needs a converged uo_profile; got {profile.verdict.value} "
            f"(final c = {profile.final:.3g})"
        )
    slack = load_settings().fatou_slack if slack is None else slack
    lhs = float(norm(limit))
    liminf = finite_liminf([float(norm(t)) for t in seq])
    return FatouResult(lhs=lhs, liminf=liminf, ok=lhs <= liminf + slack)


def norm_convergence_certificate(seq: SequenceFamily, limit: Element, eps: float,
                                 unit: Optional[Element] = None,
                                 tolerance: Optional[float] = None) -> NormCertificate:
    """Almost order bounded differences + uo convergence => norm convergence.

    The bound checked termwise is ||x_n - x|| <= eps + || |x_n - x| meet u ||
    with u the truncation witness of {x_n - x}.
    """
    differences = [t - limit for t in seq]
    witness = aob_search(differences, eps)
    uo = uo_profile(seq, limit, unit, tolerance)
    residuals = norm_profile(seq, limit, tolerance)
    profiles = {"uo": uo, "norm": residuals}
    if witness is None:
        return NormCertificate(False, residuals.converged, True, None, profiles)
    bound_holds = all(
        float(norm(d)) <= eps + float(norm(d.abs().meet(witness.unit))) + seq.model.tolerance
        for d in differences
    )
    return NormCertificate(uo.converged, residuals.converged, bound_holds, witness, profiles)


def aobuc_certificate(seq: SequenceFamily, eps: float, unit: Optional[Element] = None,
                      tolerance: Optional[float] = None) -> NormCertificate:
    """Almost order bounded + uo-Cauchy => norm-Cauchy.

    Checked through ||x_n - x_m|| <= 2 eps + 2 || |x_n - x_m| meet u ||.
    """
    witness = aob_search(seq, eps)
    uo = uo_cauchy_profile(seq, unit, tolerance)
    cauchy = norm_cauchy_profile(seq, tolerance)
    profiles = {"uo_cauchy": uo, "norm_cauchy": cauchy}
    if witness is None:
        return NormCertificate(False, cauchy.converged, True, None, profiles)
    u = witness.unit
    bound_holds = True
    for n in range(seq.horizon):
        for m in range(n + 1, seq.horizon):
            d = (seq[n] - seq[m]).abs()
            if float(norm(d)) > 2 * eps + 2 * float(norm(d.meet(u))) + seq.model.tolerance:
                bound_holds = False
    return NormCertificate(uo.converged, cauchy.converged, bound_holds, witness, profiles)


# ---------------------------------------------------------
# Positive Schur contrast
# ---------------------------------------------------------

@dataclass(frozen=True)
class SchurContrast:
    """The basis family e_n in one truncated model, seen through uo, a functional battery and the norm."""
    space: str
    uo: ConvergenceProfile
    weak: ConvergenceProfile
    norm: ConvergenceProfile

    @property
    def schur_witness(self) -> bool:
        """Positive, uo-null and weakly null on the battery, yet not norm null."""
        return self.uo.converged and self.weak.converged and not self.norm.converged

    def to_dict(self) -> Dict[str, Any]:
        return {
            "space": self.space,
            "uo": self.uo.to_dict(),
            "weak": self.weak.to_dict(),
            "norm": self.norm.to_dict(),
            "schur_witness": self.schur_witness,
        }


def schur_contrast(model: LatticeModel, battery: Sequence[Functional],
                   tolerance: Optional[float] = None) -> SchurContrast:
    """Run e_1..e_dim against 0 (uo through the unit (1/i)).

    In an l2 truncation the battery (1/i) sees e_n -> 0 while ||e_n|| = 1, so
    the family witnesses the failure of the positive Schur property. In l1
    the all-ones functional keeps f(e_n) = 1 and no witness appears.
    """
    terms = []
    for i in range(model.dim):
        coords = np.zeros(model.dim)
        coords[i] = 1.0
        terms.append(Element(coords, model))
    seq = SequenceFamily(tuple(terms), model)
    zero = Element(np.zeros(model.dim), model)
    return SchurContrast(
        space=model.space_tag.value,
        uo=uo_profile(seq, zero, harmonic_unit(model), tolerance),
        weak=battery_profile(seq, zero, battery, tolerance),
        norm=norm_profile(seq, zero, tolerance),
    )
