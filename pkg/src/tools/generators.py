"""
Random instance generators for the law suites and experiments.

All generators take an explicit numpy Generator so that a seed fixes every
instance. Exact variants produce Fraction-valued object arrays.
"""

import logging
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.models.lattice_core import Element, LatticeModel
from src.tools.convergence import SequenceFamily
from src.tools.filtration import (
    Partition,
    PartitionChain,
    Projection,
    conditional_expectation,
)
from src.utils.errors import PreconditionError

logger = logging.getLogger(__name__)


def random_element(model: LatticeModel, rng: np.random.Generator, low: int = -5, high: int = 5,
                   integer: bool = True) -> Element:
    """Integer coordinates by default so that lattice identities hold exactly in float64."""
    if integer:
        coords = rng.integers(low, high + 1, size=model.dim).astype(float)
    else:
        coords = rng.uniform(low, high, size=model.dim)
    return Element(coords, model)


def random_positive_element(model: LatticeModel, rng: np.random.Generator, high: int = 5) -> Element:
    return Element(rng.integers(0, high + 1, size=model.dim).astype(float), model)


def random_probability(dim: int, rng: np.random.Generator, exact: bool = True) -> np.ndarray:
    """Strictly positive weights summing to one."""
    raw = rng.integers(1, 10, size=dim)
    if exact:
        total = int(raw.sum())
        return np.array([Fraction(int(r), total) for r in raw], dtype=object)
    return raw / raw.sum()


def _refine(partition: Partition, order: Sequence[int], rng: np.random.Generator) -> Partition:
    """Split each block at a random cut with probability one half."""
    position = {a: i for i, a in enumerate(order)}
    refined: List[Tuple[int, ...]] = []
    for block in partition:
        members = sorted(block, key=position.get)
        if len(members) > 1 and rng.random() < 0.5:
            cut = int(rng.integers(1, len(members)))
            refined.extend([tuple(sorted(members[:cut])), tuple(sorted(members[cut:]))])
        else:
            refined.append(tuple(sorted(members)))
    return tuple(refined)


def random_partition_chain(dim: int, stages: int, rng: np.random.Generator,
                           exact: bool = True) -> PartitionChain:
    """A refining chain whose first partition is trivial; later ones split blocks at random."""
    if dim < 1 or stages < 1:
        raise PreconditionError("random chains need dim >= 1 and stages >= 1")
    order = [int(a) for a in rng.permutation(dim)]
    partitions: List[Partition] = [(tuple(range(dim)),)]
    while len(partitions) < stages:
        partitions.append(_refine(partitions[-1], order, rng))
    return PartitionChain(random_probability(dim, rng, exact), tuple(partitions))


def random_positive_projection(dim: int, rng: np.random.Generator, rank: Optional[int] = None,
                               spare_rate: float = 0.25, zero_rate: float = 0.25) -> Projection:
    """E = sum_k u_k phi_k^T with disjointly supported u_k >= 0 and phi_k(u_l) = delta_kl.

    Coordinates outside every support give zero rows; phi_k may vanish on part
    of its block or reach the spare coordinates, so zero columns occur too.
    """
    coords = [int(a) for a in rng.permutation(dim)]
    spare = [a for a in coords if rng.random() < spare_rate]
    if len(spare) == dim:
        spare = spare[1:]
    active = [a for a in coords if a not in spare]
    rank = int(rng.integers(1, len(active) + 1)) if rank is None else min(rank, len(active))
    cuts = sorted(int(c) for c in rng.choice(np.arange(1, len(active)), size=rank - 1, replace=False)) \
        if rank > 1 else []
    blocks = [active[s:e] for s, e in zip([0] + cuts, cuts + [len(active)])]

    matrix = np.zeros((dim, dim))
    for block in blocks:
        u = np.zeros(dim)
        u[block] = rng.uniform(0.5, 2.0, size=len(block))
        phi = np.zeros(dim)
        keep = [a for a in block if rng.random() >= zero_rate] or [block[0]]
        phi[keep] = rng.uniform(0.5, 2.0, size=len(keep))
        reach = [a for a in spare if rng.random() < 0.5]
        phi[reach] = rng.uniform(0.0, 2.0, size=len(reach))
        phi /= float(phi @ u)
        matrix += np.outer(u, phi)
    return Projection(matrix)


def random_partition_projection(dim: int, rng: np.random.Generator) -> Tuple[Projection, Partition]:
    """A conditional expectation for a random partition and random positive weights."""
    chain = random_partition_chain(dim, 2 + int(rng.integers(0, 3)), rng, exact=False)
    t = len(chain) - 1
    return conditional_expectation(chain, t), chain.partitions[t]


def uo_convergent_family(model: LatticeModel, horizon: int, rng: np.random.Generator,
                         rate: float = 0.5) -> Tuple[SequenceFamily, Element]:
    """x_n = x + rate**n * v_n with |v_n| <= 1: converges in order, hence uo."""
    limit = random_element(model, rng, integer=False)
    terms = []
    for n in range(1, horizon + 1):
        noise = rng.uniform(-1.0, 1.0, size=model.dim) * rate ** n
        terms.append(Element(limit.coords + noise, model))
    return SequenceFamily(tuple(terms), model), limit


def nonnegative_increments(dim: int, count: int, rng: np.random.Generator, scale: float = 1.0) -> List[np.ndarray]:
    return [rng.uniform(0.0, scale, size=dim) for _ in range(count)]
