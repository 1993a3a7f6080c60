"""
Tests for positive projections, filtrations, conditional expectations and
the double-condition diagnostics.

Run:  PYTHONPATH=. python -m pytest tests/test_filtration.py -v
"""

from fractions import Fraction

import numpy as np
import pytest

from src.models.lattice_core import (
    Element,
    Functional,
    c0_model,
    element,
    l1_model,
    ones,
    sup_model,
)
from src.tools.filtration import (
    BistochasticWitness,
    Filtration,
    PartitionChain,
    Projection,
    ValidationStatus,
    block_averaging_filtration,
    chain_to_filtration,
    conditional_expectation,
    double_condition_diagnostics,
    dyadic_chain,
    lift_chain,
    lift_fiber_filtration,
    operator_norm,
    product_gap,
    recover_partition,
    strictly_positive_fixed_vector,
    validate_filtration,
)
from src.tools.generators import (
    random_partition_chain,
    random_partition_projection,
    random_positive_projection,
)
from src.utils.errors import StructuralError

HALF = Fraction(1, 2)


class TestProjection:
    """Construction-time checks of a positive projection."""

    def test_averaging_block(self):
        p = Projection([[HALF, HALF], [HALF, HALF]])
        assert p.dim == 2
        assert p.fixes(ones(l1_model(2)))

    def test_not_idempotent(self):
        with pytest.raises(StructuralError):
            Projection([[1, 1], [0, 1]])

    def test_negative_entry(self):
        with pytest.raises(StructuralError):
            Projection([[1, 0], [-1, 0]])

    def test_not_square(self):
        with pytest.raises(StructuralError):
            Projection([[1, 0, 0], [0, 1, 0]])

    def test_exact_product_gap(self):
        a = np.array([[HALF, HALF], [HALF, HALF]], dtype=object)
        assert product_gap(a, a, a) == 0.0
        identity = np.array([[Fraction(1), Fraction(0)], [Fraction(0), Fraction(1)]], dtype=object)
        assert product_gap(a, identity, identity) == pytest.approx(0.5)


class TestValidateFiltration:
    """Compatibility, the double condition and boundedness."""

    def test_identity_only(self):
        model = l1_model(3)
        filtration = Filtration((Projection(np.eye(3)),), model,
                                BistochasticWitness(element(model, [1, 2, 3]), Functional([3, 2, 1])))
        report = validate_filtration(filtration)
        assert report.compatible and report.bistochastic
        assert report.bounded_const == pytest.approx(1.0)
        assert report.status == ValidationStatus.PASS

    @pytest.mark.parametrize("x0", ["geometric", "ones"])
    def test_block_averaging_filtration(self, x0):
        filtration = block_averaging_filtration(8)
        assert len(filtration) == 5
        if x0 == "ones":
            filtration = Filtration(filtration.stages, filtration.model,
                                    BistochasticWitness(ones(filtration.model),
                                                        Functional([Fraction(1, 8)] * 8)))
        report = validate_filtration(filtration, tol=0.0)
        assert report.compatible
        assert report.bistochastic
        assert report.bounded_const == 1.0
        assert report.failed_checks == 0

    def test_block_stages_keep_leading_pairs(self):
        filtration = block_averaging_filtration(8)
        first, last = filtration.stages[0].matrix, filtration.stages[-1].matrix
        assert all(first[i, i] == HALF for i in range(8))
        assert all(last[i, i] == 1 for i in range(8))
        assert filtration.stages[2].matrix[3, 3] == 1 and filtration.stages[2].matrix[4, 5] == HALF

    def test_incompatible_pair_is_reported(self):
        model = l1_model(2)
        averaging = Projection([[HALF, HALF], [HALF, HALF]])
        onto_first = Projection([[1, 0], [0, 0]])
        report = validate_filtration(Filtration((averaging, onto_first), model))
        assert not report.compatible
        assert report.status == ValidationStatus.FAIL
        assert any(i.issue_type == "incompatible_stages" for i in report.issues)

    def test_witness_not_fixed_is_reported(self):
        model = l1_model(2)
        averaging = Projection([[HALF, HALF], [HALF, HALF]])
        witness = BistochasticWitness(element(model, [1, 2]), Functional([1, 1]))
        report = validate_filtration(Filtration((averaging,), model, witness))
        assert not report.bistochastic
        assert any(i.issue_type == "weak_unit_not_fixed" for i in report.issues)
        assert report.to_dict()["status"] == "fail"

    def test_sup_operator_norm_uses_row_sums(self):
        stage = Projection([[HALF, HALF], [HALF, HALF]])
        assert operator_norm(stage, sup_model(2)) == 1.0

    def test_empty_filtration_rejected(self):
        with pytest.raises(StructuralError):
            Filtration((), l1_model(2))

    def test_round_trip_through_dict(self):
        filtration = block_averaging_filtration(4)
        again = Filtration.from_dict(filtration.to_dict(), filtration.model)
        assert len(again) == len(filtration)
        assert all(np.array_equal(a.matrix, b.matrix) for a, b in zip(again.stages, filtration.stages))
        assert again.bistochastic_witness.x0.equals(filtration.bistochastic_witness.x0, 0)


class TestConditionalExpectation:
    """Block averaging against a probability vector."""

    def test_two_blocks(self):
        chain = PartitionChain(np.array([Fraction(1, 4)] * 4, dtype=object), (((0, 1), (2, 3)),))
        stage = conditional_expectation(chain, 0)
        x = Element(np.array([1, 3, 2, 6], dtype=float), l1_model(4))
        assert list(stage.apply(x).coords) == [2, 2, 4, 4]

    def test_finest_partition_is_identity(self):
        chain = PartitionChain(np.array([Fraction(1, 3)] * 3, dtype=object), (((0,), (1,), (2,)),))
        matrix = conditional_expectation(chain, 0).matrix
        assert all(matrix[i, j] == (1 if i == j else 0) for i in range(3) for j in range(3))

    def test_coarsest_partition_preserves_expectation(self):
        mu = [Fraction(1, 6), Fraction(1, 3), Fraction(1, 2)]
        chain = PartitionChain(np.array(mu, dtype=object), (((0, 1, 2),),))
        stage = conditional_expectation(chain, 0)
        x = np.array([Fraction(3), Fraction(-1), Fraction(5)], dtype=object)
        image = stage.matrix @ x
        assert len(set(image)) == 1
        assert sum(m * v for m, v in zip(mu, image)) == sum(m * v for m, v in zip(mu, x))

    def test_non_refining_chain_rejected(self):
        with pytest.raises(StructuralError):
            PartitionChain(np.array([0.25] * 4), (((0, 1), (2, 3)), ((0, 2), (1, 3))))

    def test_weights_must_sum_to_one(self):
        with pytest.raises(StructuralError):
            PartitionChain(np.array([0.5, 0.6]), (((0, 1),),))

    def test_random_chain_laws(self):
        rng = np.random.default_rng(20240613)
        for _ in range(500):
            dim = int(rng.integers(1, 65))
            chain = random_partition_chain(dim, int(rng.integers(1, 4)), rng)
            mu = chain.sample_weights
            stages = [conditional_expectation(chain, t) for t in range(len(chain))]
            unit = np.array([Fraction(1)] * dim, dtype=object)
            for stage in stages:
                assert all(v == 1 for v in stage.matrix @ unit)
                assert all(a == b for a, b in zip(stage.matrix.T @ mu, mu))
            # exact products up to 16 atoms, float64 beyond
            matrices = [s.matrix if dim <= 16 else s.matrix.astype(float) for s in stages]
            tol = 0.0 if dim <= 16 else 1e-12
            for s, es in enumerate(matrices):
                for et in matrices[s:]:
                    assert product_gap(es, et, es) <= tol
                    assert product_gap(et, es, es) <= tol

    def test_large_chain_laws(self):
        rng = np.random.default_rng(99)
        chain = random_partition_chain(64, 4, rng)
        filtration = chain_to_filtration(chain)
        report = validate_filtration(filtration, tol=1e-12)
        assert report.compatible and report.bistochastic


class TestChainFiltrations:
    """Dyadic chains, lifted chains and fiber filtrations."""

    def test_dyadic_chain_on_eight_atoms(self):
        filtration = chain_to_filtration(dyadic_chain(3))
        assert len(filtration) == 4
        report = validate_filtration(filtration)
        assert report.compatible and report.bistochastic and report.bounded_const == pytest.approx(1.0)

    def test_exact_chains_fix_their_witness_exactly(self):
        filtration = chain_to_filtration(dyadic_chain(3))
        assert all(isinstance(v, Fraction) for v in filtration.bistochastic_witness.x0.coords)
        report = validate_filtration(filtration, tol=0.0)
        assert report.compatible and report.bistochastic
        lifted = lift_chain(dyadic_chain(2), l1_model(3))
        report = validate_filtration(lifted, tol=0.0)
        assert report.compatible and report.bistochastic

    def test_single_partition_chain(self):
        chain = PartitionChain(np.array([0.5, 0.5]), (((0, 1),),))
        assert len(chain_to_filtration(chain)) == 1

    def test_zero_probability_block_rejected(self):
        chain = PartitionChain(np.array([1.0, 0.0]), (((0,), (1,)),))
        with pytest.raises(StructuralError):
            chain_to_filtration(chain)

    def test_lifted_chain(self):
        lifted = lift_chain(dyadic_chain(2), l1_model(3))
        assert lifted.model.dim == 12
        report = validate_filtration(lifted)
        assert report.compatible and report.bistochastic

    def test_lifted_fiber_filtration(self):
        lifted = lift_fiber_filtration([HALF, HALF], block_averaging_filtration(4))
        assert lifted.model.fiber == c0_model(4)
        report = validate_filtration(lifted)
        assert report.compatible and report.bistochastic
        assert report.bounded_const == pytest.approx(1.0)


class TestDoubleCondition:
    """Strict positivity of E and E* against fixed strictly positive pairs."""

    def test_averaging_block(self):
        report = double_condition_diagnostics(Projection([[HALF, HALF], [HALF, HALF]]))
        assert report.strictly_positive and report.adjoint_strictly_positive
        assert report.has_fixed_pair and report.equivalence_holds and report.basis_check_agrees
        assert report.fixed_weak_unit == pytest.approx([0.5, 0.5])
        assert report.fixed_strict_functional == pytest.approx([0.5, 0.5])

    def test_coordinate_projection(self):
        report = double_condition_diagnostics(Projection([[1, 0], [0, 0]]))
        assert not report.strictly_positive
        assert report.fixed_weak_unit is None
        assert report.equivalence_holds

    def test_identity(self):
        report = double_condition_diagnostics(Projection(np.eye(3)))
        assert report.strictly_positive and report.adjoint_strictly_positive and report.has_fixed_pair

    def test_rounding_noise_keeps_the_fixed_space(self):
        rng = np.random.default_rng(5)
        for dim in (3, 5):
            noisy = np.eye(dim) + 1e-17 * rng.random((dim, dim))
            vector = strictly_positive_fixed_vector(noisy)
            assert vector is not None
            assert vector == pytest.approx([1 / dim] * dim)
            report = double_condition_diagnostics(Projection(noisy))
            assert report.has_fixed_pair and report.equivalence_holds

    def test_basis_check_on_one_sided_kernel(self):
        # no zero column, but the second row vanishes
        report = double_condition_diagnostics(Projection([[1.0, 1.0], [0.0, 0.0]]))
        assert report.strictly_positive
        assert not report.adjoint_strictly_positive
        assert report.basis_check_agrees
        assert not report.has_fixed_pair

    def test_fixed_vector_search(self):
        assert strictly_positive_fixed_vector(np.array([[1.0, 0.0], [0.0, 0.0]])) is None
        vector = strictly_positive_fixed_vector(np.array([[0.5, 0.5], [0.5, 0.5]]))
        assert vector is not None and np.all(vector > 0)

    def test_random_projections_never_disagree(self):
        rng = np.random.default_rng(20240613)
        disagreements = 0
        for _ in range(1_000):
            stage = random_positive_projection(int(rng.integers(1, 7)), rng)
            report = double_condition_diagnostics(stage)
            if not (report.equivalence_holds and report.basis_check_agrees):
                disagreements += 1
        assert disagreements == 0


class TestRecoverPartition:
    """Reading the partition back off a conditional-expectation matrix."""

    def test_random_partition_projections(self):
        rng = np.random.default_rng(31)
        for _ in range(200):
            stage, partition = random_partition_projection(int(rng.integers(2, 9)), rng)
            assert sorted(recover_partition(stage)) == sorted(partition)

    def test_non_conditional_expectation(self):
        stage = Projection([[1.0, 1.0], [0.0, 0.0]])
        assert recover_partition(stage) is None

    def test_with_explicit_weights(self):
        mu = np.array([Fraction(1, 8), Fraction(3, 8), Fraction(1, 4), Fraction(1, 4)], dtype=object)
        chain = PartitionChain(mu, (((0, 1), (2, 3)),))
        assert recover_partition(conditional_expectation(chain, 0), mu) == ((0, 1), (2, 3))
