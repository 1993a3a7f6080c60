"""
Polya Urn Oracle - exact path-space enumeration

Enumerates every draw sequence of a Polya urn up to a fixed depth in
rational arithmetic. Atoms are the 2**depth paths in lexicographic order
(draw 1 = red); stage t groups paths by their first t draws, t = 0..depth.
The red proportion after t draws is a martingale for this chain, and every
experiment built on the urn is compared against these exact values.
"""

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.tools.filtration import PartitionChain
from src.utils.config_parser import load_settings
from src.utils.errors import PreconditionError

logger = logging.getLogger(__name__)

RED = 1
BLACK = 0


@dataclass(frozen=True)
class PolyaUrnOracle:
    """Urn with `red` and `black` starting balls; each draw returns the ball plus `reinforcement` copies."""
    depth: int
    red: int = 1
    black: int = 1
    reinforcement: int = 1
    paths: Tuple[Tuple[int, ...], ...] = field(init=False, repr=False)
    probabilities: Tuple[Fraction, ...] = field(init=False, repr=False)

    def __post_init__(self):
        max_depth = load_settings().max_urn_depth
        if not 1 <= self.depth <= max_depth:
            raise PreconditionError(f"urn depth must be in 1..{max_depth}, got {self.depth}")
        if self.red < 1 or self.black < 1 or self.reinforcement < 1:
            raise PreconditionError("urn needs at least one ball of each colour and reinforcement >= 1")
        paths = tuple(itertools.product((RED, BLACK), repeat=self.depth))
        object.__setattr__(self, "paths", paths)
        object.__setattr__(self, "probabilities", tuple(self.path_probability(p) for p in paths))
        total = sum(self.probabilities)
        if total != 1:
            raise PreconditionError(f"path probabilities sum to {total}, expected 1")
        logger.debug(f"🔍 Enumerated {len(paths)} urn paths at depth {self.depth}")

    @property
    def atoms(self) -> int:
        return len(self.paths)

    def path_probability(self, path: Tuple[int, ...]) -> Fraction:
        reds, blacks = self.red, self.black
        prob = Fraction(1)
        for draw in path:
            total = reds + blacks
            if draw == RED:
                prob *= Fraction(reds, total)
                reds += self.reinforcement
            else:
                prob *= Fraction(blacks, total)
                blacks += self.reinforcement
        return prob

    def proportion(self, path: Tuple[int, ...], t: int) -> Fraction:
        """Red fraction after the first t draws of `path`."""
        drawn_red = sum(path[:t])
        return Fraction(self.red + self.reinforcement * drawn_red,
                        self.red + self.black + self.reinforcement * t)

    def chain(self, exact: bool = True) -> PartitionChain:
        """Stage t: paths sharing their first t draws; blocks are contiguous in lexicographic order.

        exact=False hands floats to the chain so that large-depth filtrations validate quickly.
        """
        partitions = []
        for t in range(self.depth + 1):
            size = 2 ** (self.depth - t)
            partitions.append(tuple(tuple(range(s, s + size)) for s in range(0, self.atoms, size)))
        mu = np.array(self.probabilities, dtype=object) if exact else np.array([float(p) for p in self.probabilities])
        return PartitionChain(mu, tuple(partitions))

    def proportion_trace(self) -> List[np.ndarray]:
        """z_t (t = 0..depth) as exact vectors over the path atoms."""
        return [np.array([self.proportion(p, t) for p in self.paths], dtype=object)
                for t in range(self.depth + 1)]

    def submartingale_trace(self, drift: Any = Fraction(1, 100)) -> List[np.ndarray]:
        """z_t = p_t - drift * (depth - t): a strict submartingale with the same limit."""
        drift = Fraction(drift)
        if drift < 0:
            raise PreconditionError("drift must be nonnegative")
        return [values - drift * (self.depth - t) for t, values in enumerate(self.proportion_trace())]

    def expected_proportion(self, t: int) -> Fraction:
        """E[p_t] computed by summing over paths; equals red / (red + black) for every t."""
        return sum(mu * self.proportion(p, t) for mu, p in zip(self.probabilities, self.paths))

    def red_count_distribution(self) -> Dict[int, Fraction]:
        """Law of the number of red draws (beta-binomial)."""
        law: Dict[int, Fraction] = {}
        for mu, path in zip(self.probabilities, self.paths):
            law[sum(path)] = law.get(sum(path), Fraction(0)) + mu
        return dict(sorted(law.items()))

    def compare(self, values: List[np.ndarray], reference: Optional[List[np.ndarray]] = None) -> float:
        """Largest coordinate gap between a computed trace and the exact one."""
        reference = self.proportion_trace() if reference is None else reference
        if len(values) != len(reference):
            raise PreconditionError(f"trace has {len(values)} terms, oracle has {len(reference)}")
        gap = 0.0
        for got, want in zip(values, reference):
            gap = max(gap, float(np.max(np.abs(np.asarray(got, dtype=float) - want.astype(float)))))
        return gap

    def to_dict(self) -> Dict[str, Any]:
        return {
            "depth": self.depth,
            "red": self.red,
            "black": self.black,
            "reinforcement": self.reinforcement,
            "atoms": self.atoms,
        }
