"""
Tests for the AL view: the L-norm, the probability-model isometry and the
contractive extension check.
"""

import numpy as np
import pytest

from src.models.al_representation import (
    ALView,
    al_norm,
    contractive_extension_check,
    normalize_view,
    probability_coordinates,
    to_probability_model,
)
from src.models.lattice_core import Functional, element, l1_model, norm, ones, sup_model
from src.tools.convergence import SequenceFamily, uo_profile
from src.tools.generators import random_element, random_positive_element, uo_convergent_family
from src.utils.errors import ModelMismatchError, PreconditionError


class TestALNorm:
    """||x||_L = x0*(|x|)."""

    @pytest.fixture
    def view(self):
        model = sup_model(4)
        return ALView(model, Functional([0.25] * 4), ones(model))

    def test_uniform_functional(self, view):
        assert al_norm(view, element(view.base, [1, -1, 2, 0])) == pytest.approx(1.0)

    def test_additive_on_positives(self, view):
        rng = np.random.default_rng(1)
        for _ in range(200):
            x = random_positive_element(view.base, rng)
            y = random_positive_element(view.base, rng)
            assert al_norm(view, x + y) == pytest.approx(al_norm(view, x) + al_norm(view, y))

    def test_is_a_norm(self, view):
        rng = np.random.default_rng(6)
        for _ in range(200):
            x = random_element(view.base, rng, integer=False)
            y = random_element(view.base, rng, integer=False)
            scale = float(rng.uniform(-3, 3))
            assert al_norm(view, x + y) <= al_norm(view, x) + al_norm(view, y) + 1e-12
            assert al_norm(view, x * scale) == pytest.approx(abs(scale) * al_norm(view, x))
        assert al_norm(view, element(view.base, [0, 0, 0, 0])) == 0
        assert al_norm(view, element(view.base, [0, 0, 1e-9, 0])) > 0

    def test_normalized_unit_has_norm_one(self, view):
        assert view.normalized
        assert al_norm(view, view.x0) == pytest.approx(1.0)

    def test_view_needs_strict_functional(self):
        model = sup_model(2)
        with pytest.raises(PreconditionError):
            ALView(model, Functional([1, 0]), ones(model))

    def test_view_needs_weak_unit(self):
        model = sup_model(2)
        with pytest.raises(PreconditionError):
            ALView(model, Functional([1, 1]), element(model, [1, 0]))

    def test_foreign_element_rejected(self, view):
        with pytest.raises(ModelMismatchError):
            al_norm(view, ones(sup_model(3)))


class TestProbabilityModel:
    """The isometry x -> x / x0 onto a probability L1 model."""

    def test_identity_case(self):
        model = sup_model(4)
        prob, image = to_probability_model(ALView(model, Functional([0.25] * 4), ones(model)))
        assert list(prob.weight_vector) == pytest.approx([0.25] * 4)
        assert list(image.coords) == [1, 1, 1, 1]

    def test_rescaled_unit(self):
        model = sup_model(2)
        view = ALView(model, Functional([0.25, 0.5]), element(model, [2, 1]))
        prob, image = to_probability_model(view)
        assert list(prob.weight_vector) == pytest.approx([0.5, 0.5])
        assert list(image.coords) == pytest.approx([1, 1])

        rng = np.random.default_rng(2)
        for _ in range(100):
            x = random_element(model, rng, integer=False)
            mapped = probability_coordinates(view, x, prob)
            assert mapped.model is prob
            assert float(norm(mapped)) == pytest.approx(float(al_norm(view, x)))

    def test_positivity_is_preserved(self):
        model = sup_model(3)
        view = ALView(model, Functional([0.2, 0.3, 0.5]), ones(model))
        rng = np.random.default_rng(4)
        for _ in range(100):
            x = random_positive_element(model, rng)
            assert probability_coordinates(view, x).is_positive(0)

    def test_unnormalized_view_refused_until_rescaled(self):
        model = sup_model(2)
        view = ALView(model, Functional([1, 1]), ones(model))
        with pytest.raises(PreconditionError):
            to_probability_model(view)
        prob, _ = to_probability_model(normalize_view(view))
        assert float(np.sum(prob.weight_vector)) == pytest.approx(1.0)


class TestIsomorphismKeepsUoLimits:
    """The map onto the probability model is a coordinatewise lattice isomorphism."""

    @pytest.fixture
    def view(self):
        model = sup_model(3)
        return ALView(model, Functional([0.125, 0.25, 0.125]), element(model, [2, 1, 4]))

    def test_lattice_operations_commute(self, view):
        prob, _ = to_probability_model(view)
        rng = np.random.default_rng(8)

        def image(x):
            return probability_coordinates(view, x, prob)

        for _ in range(200):
            x = random_element(view.base, rng, integer=False)
            y = random_element(view.base, rng, integer=False)
            assert image(x.meet(y)).equals(image(x).meet(image(y)), 1e-12)
            assert image(x.join(y)).equals(image(x).join(image(y)), 1e-12)
            assert image(x.abs()).equals(image(x).abs(), 1e-12)

    def test_uo_verdicts_agree(self, view):
        prob, unit_image = to_probability_model(view)
        rng = np.random.default_rng(9)

        def image(x):
            return probability_coordinates(view, x, prob)

        families = [uo_convergent_family(view.base, 30, rng) for _ in range(20)]
        e1 = element(view.base, [1, 0, 0])
        alternating = SequenceFamily(tuple(e1 if n % 2 == 0 else -e1 for n in range(30)), view.base)
        families.append((alternating, element(view.base, [0, 0, 0])))
        for xs, x in families:
            mapped = SequenceFamily(tuple(image(t) for t in xs), prob)
            base = uo_profile(xs, x, view.x0)
            moved = uo_profile(mapped, image(x), unit_image)
            assert base.verdict == moved.verdict


class TestContractiveExtension:
    """Operators preserving x0* contract the L-norm."""

    @pytest.fixture
    def view(self):
        model = l1_model(2)
        return ALView(model, Functional([0.5, 0.5]), ones(model))

    def test_identity(self, view):
        check = contractive_extension_check(view, np.eye(2))
        assert check.preserves
        assert check.contraction_ratio == pytest.approx(1.0)

    def test_averaging_block(self, view):
        check = contractive_extension_check(view, [[0.5, 0.5], [0.5, 0.5]], probes=100)
        assert check.preserves
        assert check.contraction_ratio <= 1 + 1e-12

    def test_doubling_does_not_preserve(self, view):
        check = contractive_extension_check(view, 2 * np.eye(2))
        assert not check.preserves
        assert check.contraction_ratio == pytest.approx(2.0)

    def test_negative_operator_rejected(self, view):
        with pytest.raises(PreconditionError):
            contractive_extension_check(view, [[1, -1], [0, 1]])

    def test_shape_mismatch(self, view):
        with pytest.raises(ModelMismatchError):
            contractive_extension_check(view, np.eye(3))
