"""Bregman-distance loss: values, gradients, envelope identity, baselines."""

import math
import random

import pytest

from bregman_perceptron.activation import identity_activation, rectifier, softshrink
from bregman_perceptron.loss import (
    BregmanLoss,
    SquaredLoss,
    TargetDomainError,
    bregman_distance,
    bregman_loss,
    bregman_loss_grad_z,
    central_difference_grad,
    envelope_loss,
    squared_loss,
    squared_loss_subgrad_z,
)
from bregman_perceptron.tensor import DenseVector

from conftest import random_vector

RELU = rectifier()
IDENT = identity_activation()
SHRINK = softshrink(0.9)


def _draw_pair(rng, act, n):
    """Random (y, z) with y in dom and z away from kinks."""
    kinks = {"relu": (0.0,), "softshrink": (-act.theta, act.theta)}.get(act.kind, ())
    z = []
    while len(z) < n:
        c = rng.uniform(-8.0, 8.0)
        if all(abs(c - k) >= 1e-3 for k in kinks):
            z.append(c)
    lo = 0.0 if act.kind == "relu" else -4.0
    y = [rng.uniform(lo, 4.0) for _ in range(n)]
    return DenseVector(y), DenseVector(z)


class TestHandValues:
    """Scalar cases small enough to verify by hand."""

    def test_perfect_rectifier_prediction_costs_nothing(self):
        # y=0, z=-1: prox clamps to 0, Bregman term vanishes on the orthant edge
        assert bregman_loss(RELU, DenseVector([0.0]), DenseVector([-1.0])) == 0.0

    def test_rectifier_active_region_is_squared_error(self):
        assert bregman_loss(RELU, DenseVector([1.0]), DenseVector([2.0])) == 0.5

    def test_rectifier_dead_region_pays_linear_term(self):
        # y=2, z=-1: 0.5*(2-0)^2 + D = 2 + 2
        assert bregman_loss(RELU, DenseVector([2.0]), DenseVector([-1.0])) == 4.0

    def test_distance_hand_value(self):
        d = bregman_distance(RELU, DenseVector([2.0]), DenseVector([0.0]), DenseVector([-1.0]))
        assert d == 2.0

    def test_identity_collapses_to_squared_loss_bitwise(self):
        rng = random.Random(41)
        for _ in range(100):
            y, z = random_vector(rng, 3), random_vector(rng, 3)
            a = bregman_loss(IDENT, y, z)
            b = squared_loss(IDENT, y, z)
            assert a == b  # exact, not approx


class TestDomains:
    def test_target_outside_domain_rejected(self):
        with pytest.raises(TargetDomainError):
            bregman_loss(RELU, DenseVector([-1.0]), DenseVector([0.5]))

    def test_distance_vertex_outside_domain(self):
        # D(u, v): infinite penalty at u gives an infinite distance,
        # infinite penalty at v is a caller error
        assert bregman_distance(RELU, DenseVector([-1.0]), DenseVector([0.0]),
                                DenseVector([0.0])) == math.inf
        with pytest.raises(ValueError):
            bregman_distance(RELU, DenseVector([1.0]), DenseVector([-1.0]),
                             DenseVector([0.0]))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            bregman_loss(RELU, DenseVector([1.0, 2.0]), DenseVector([1.0]))


class TestEnvelopeIdentity:
    """The loss equals a difference of two envelope evaluations."""

    @pytest.mark.parametrize("act", [RELU, IDENT, SHRINK], ids=["relu", "identity", "softshrink"])
    def test_identity_within_1e10(self, act):
        rng = random.Random(42)
        worst = 0.0
        for _ in range(1000):
            y, z = _draw_pair(rng, act, rng.randint(1, 5))
            gap = abs(bregman_loss(act, y, z) - envelope_loss(act, y, z))
            worst = max(worst, gap)
        assert worst <= 1e-10

    def test_loss_nonnegative(self):
        rng = random.Random(43)
        for act in (RELU, IDENT, SHRINK):
            for _ in range(500):
                y, z = _draw_pair(rng, act, 3)
                assert bregman_loss(act, y, z) >= -1e-12

    def test_zero_iff_prox_hits_target(self):
        rng = random.Random(44)
        for act in (RELU, IDENT, SHRINK):
            for _ in range(300):
                y, z = _draw_pair(rng, act, 2)
                loss = bregman_loss(act, y, z)
                exact = act.prox(z).to_list() == y.to_list()
                if exact:
                    assert loss == 0.0
                if loss == 0.0:
                    assert act.prox(z).to_list() == pytest.approx(y.to_list(), abs=1e-12)


class TestGradient:
    """d/dz of the loss is prox(z) - y; no activation derivative appears."""

    @pytest.mark.parametrize("act", [RELU, IDENT, SHRINK], ids=["relu", "identity", "softshrink"])
    def test_matches_central_difference(self, act):
        rng = random.Random(45)
        worst = 0.0
        for _ in range(200):
            y, z = _draw_pair(rng, act, rng.randint(1, 4))
            grad = bregman_loss_grad_z(act, y, z)
            fd = central_difference_grad(lambda zz: bregman_loss(act, y, zz), z)
            for g, f in zip(grad, fd):
                worst = max(worst, abs(f - g) / max(1.0, abs(g)))
        assert worst <= 1e-5

    def test_gradient_formula(self):
        y, z = DenseVector([1.0, 0.0]), DenseVector([3.0, -2.0])
        got = bregman_loss_grad_z(RELU, y, z)
        # prox(z) - y = (3,0) - (1,0)
        assert got.to_list() == [2.0, -0.0] or got.to_list() == [2.0, 0.0]

    def test_gradient_rejects_bad_target(self):
        with pytest.raises(TargetDomainError):
            bregman_loss_grad_z(RELU, DenseVector([-1.0]), DenseVector([0.0]))


class TestSquaredLossBaseline:
    def test_value(self):
        assert squared_loss(RELU, DenseVector([1.0]), DenseVector([2.0])) == 0.5
        assert squared_loss(RELU, DenseVector([2.0]), DenseVector([-1.0])) == 2.0

    def test_subgradient_carries_activation_slope(self):
        y = DenseVector([2.0, 1.0])
        z = DenseVector([-1.0, 3.0])
        got = squared_loss_subgrad_z(RELU, y, z)
        # dead unit contributes exactly zero: (0-2)*0, live unit (3-1)*1
        assert got.to_list() == [0.0, 2.0]

    def test_dead_units_stop_learning(self):
        # the well-known failure mode the Bregman loss avoids
        y = DenseVector([5.0])
        z = DenseVector([-0.5])
        assert squared_loss_subgrad_z(RELU, y, z).to_list() == [0.0]
        assert bregman_loss_grad_z(RELU, y, z).to_list() == [-5.0]

    def test_subgradient_requires_subderivative(self):
        class NoSlope:
            def output(self, z):
                return z

        with pytest.raises(TypeError):
            squared_loss_subgrad_z(NoSlope(), DenseVector([1.0]), DenseVector([1.0]))


class TestLossObjects:
    def test_bregman_object_dispatch(self):
        obj = BregmanLoss(RELU)
        y, z = DenseVector([1.0]), DenseVector([2.0])
        assert obj.per_sample(y, z) == bregman_loss(RELU, y, z)
        assert obj.grad_z(y, z).to_list() == bregman_loss_grad_z(RELU, y, z).to_list()
        assert obj.needs_subderivative is False

    def test_squared_object_dispatch(self):
        obj = SquaredLoss(RELU)
        y, z = DenseVector([1.0]), DenseVector([-2.0])
        assert obj.per_sample(y, z) == squared_loss(RELU, y, z)
        assert obj.grad_z(y, z).to_list() == squared_loss_subgrad_z(RELU, y, z).to_list()
        assert obj.needs_subderivative is True

    def test_bregman_object_requires_proximal(self):
        from bregman_perceptron.activation import HeavisideActivation

        with pytest.raises(TypeError):
            BregmanLoss(HeavisideActivation())
