"""
Tests for the exact Polya urn oracle and the martingale it induces.

Run:  PYTHONPATH=. python -m pytest tests/test_polya_urn.py -v
"""

from fractions import Fraction

import numpy as np
import pytest

from src.agents.martingale_lab import ProcessKind, ProcessTrace, verify_process
from src.models.lattice_core import Element
from src.tools.filtration import chain_to_filtration, validate_filtration
from src.tools.polya_urn import BLACK, RED, PolyaUrnOracle
from src.utils.errors import PreconditionError


# -------------------------------------------------------
# Fixtures
# -------------------------------------------------------

@pytest.fixture(scope="module")
def urn10():
    return PolyaUrnOracle(depth=10)


@pytest.fixture(scope="module")
def urn5():
    return PolyaUrnOracle(depth=5)


def _trace(oracle, rows, kind):
    filtration = chain_to_filtration(oracle.chain(exact=False))
    values = tuple(Element(r.astype(float), filtration.model) for r in rows)
    return ProcessTrace(filtration, values, kind)


class TestEnumeration:
    """Path space and exact probabilities."""

    def test_depth_ten_has_1024_atoms(self, urn10):
        assert urn10.atoms == 1024
        assert sum(urn10.probabilities) == 1

    def test_first_path_is_all_red(self, urn10):
        assert urn10.paths[0] == (RED,) * 10
        assert urn10.paths[-1] == (BLACK,) * 10
        # 1/2 * 2/3 * ... * 10/11
        assert urn10.probabilities[0] == Fraction(1, 11)

    def test_path_probability_depends_on_counts_only(self):
        urn = PolyaUrnOracle(depth=3)
        assert urn.path_probability((RED, BLACK, BLACK)) == urn.path_probability((BLACK, BLACK, RED))
        assert urn.path_probability((RED, BLACK, BLACK)) == Fraction(1, 12)

    def test_proportion_after_draws(self):
        urn = PolyaUrnOracle(depth=3)
        assert urn.proportion((RED, RED, BLACK), 0) == Fraction(1, 2)
        assert urn.proportion((RED, RED, BLACK), 2) == Fraction(3, 4)
        assert urn.proportion((RED, RED, BLACK), 3) == Fraction(3, 5)

    def test_reinforcement_and_start(self):
        urn = PolyaUrnOracle(depth=2, red=2, black=1, reinforcement=2)
        assert urn.path_probability((RED, RED)) == Fraction(2, 3) * Fraction(4, 5)
        assert sum(urn.probabilities) == 1

    @pytest.mark.parametrize("depth", [0, 13])
    def test_depth_out_of_range(self, depth):
        with pytest.raises(PreconditionError):
            PolyaUrnOracle(depth=depth)

    def test_needs_balls_of_both_colours(self):
        with pytest.raises(PreconditionError):
            PolyaUrnOracle(depth=2, red=0)


class TestLaws:
    """Distributional facts of the urn."""

    def test_expected_proportion_is_constant(self, urn10):
        assert all(urn10.expected_proportion(t) == Fraction(1, 2) for t in range(11))

    def test_expected_proportion_with_uneven_start(self):
        urn = PolyaUrnOracle(depth=6, red=2, black=3)
        assert all(urn.expected_proportion(t) == Fraction(2, 5) for t in range(7))

    def test_red_count_is_uniform(self, urn10):
        law = urn10.red_count_distribution()
        assert list(law) == list(range(11))
        assert all(p == Fraction(1, 11) for p in law.values())

    def test_to_dict(self, urn5):
        assert urn5.to_dict() == {"depth": 5, "red": 1, "black": 1, "reinforcement": 1, "atoms": 32}


class TestUrnFiltration:
    """The path filtration and the proportion martingale."""

    def test_chain_stages(self, urn5):
        chain = urn5.chain()
        assert len(chain) == 6
        assert chain.partitions[0] == (tuple(range(32)),)
        assert len(chain.partitions[-1]) == 32

    def test_exact_chain_validates(self, urn5):
        report = validate_filtration(chain_to_filtration(urn5.chain(exact=True)), tol=0.0)
        assert report.compatible and report.bistochastic

    def test_proportion_is_a_martingale(self, urn5):
        trace = _trace(urn5, urn5.proportion_trace(), ProcessKind.MARTINGALE)
        check = verify_process(trace)
        assert check.is_martingale
        assert check.max_violation <= 1e-12

    def test_drifted_trace_is_a_strict_submartingale(self, urn5):
        trace = _trace(urn5, urn5.submartingale_trace(Fraction(1, 50)), ProcessKind.SUBMARTINGALE)
        check = verify_process(trace)
        assert check.is_submartingale
        assert not check.is_martingale

    def test_negative_drift_rejected(self, urn5):
        with pytest.raises(PreconditionError):
            urn5.submartingale_trace(-1)


class TestCompare:
    """Gap between a computed trace and the exact reference."""

    def test_float_trace_agrees(self, urn10):
        values = [r.astype(float) for r in urn10.proportion_trace()]
        assert urn10.compare(values) <= 1e-12

    def test_perturbed_trace_disagrees(self, urn5):
        values = [r.astype(float) for r in urn5.proportion_trace()]
        values[3] = values[3] + 1e-3
        assert urn5.compare(values) == pytest.approx(1e-3)

    def test_length_mismatch(self, urn5):
        with pytest.raises(PreconditionError):
            urn5.compare([np.zeros(32)])
