"""Loss formulas: frozen hand-computed values, inequalities, objective reductions."""

import numpy as np
import pytest

from shiftbound.losses import (
    batch_loss_and_logit_grad,
    dis2_objective,
    dis_loss,
    disagreement_losses,
    logistic_loss,
    logistic_losses,
    odd_objective,
)
from shiftbound.nn import MlpClassifier, identity_model


class TestLogisticLoss:
    def test_uniform_two_class_is_one(self):
        assert logistic_loss([0.0, 0.0], 0) == pytest.approx(1.0, abs=1e-12)

    def test_uniform_four_class_is_one(self):
        assert logistic_loss([1.3] * 4, 2) == pytest.approx(1.0, abs=1e-12)

    def test_frozen_value_two_zero(self):
        # -log(e^2 / (e^2 + 1)) / log 2, evaluated separately with math.*
        assert logistic_loss([2.0, 0.0], 0) == pytest.approx(
            0.1831184120815963, abs=1e-12)

    def test_single_class_rejected(self):
        with pytest.raises(Exception):
            logistic_loss([1.0], 0)


class TestDisagreementLoss:
    def test_symmetric_logits_give_one(self):
        assert dis_loss([0.0, 0.0], 0) == pytest.approx(1.0, abs=1e-12)

    def test_frozen_value_two_zero(self):
        # log(1 + e^2) / log 2, evaluated separately with math.*
        assert dis_loss([2.0, 0.0], 0) == pytest.approx(
            3.068508493859523, abs=1e-12)

    def test_zero_margin_three_class(self):
        # y=1 logit equals the mean of the others: margin 0, loss exactly 1
        assert dis_loss([1.0, 3.0, 5.0], 1) == pytest.approx(1.0, abs=1e-12)

    def test_lower_bounds_agreement_indicator(self):
        rng = np.random.default_rng(17)
        for k in (2, 3, 10):
            Z = rng.normal(scale=3.0, size=(2000, k))
            y = rng.integers(0, k, size=2000)
            losses = disagreement_losses(Z, y)
            indicator = (np.argmax(Z, axis=1) == y).astype(float)
            assert np.all(losses >= indicator)


class TestSharedProperties:
    def test_shift_invariance(self):
        rng = np.random.default_rng(23)
        Z = rng.normal(size=(200, 4))
        y = rng.integers(0, 4, size=200)
        shifted = Z + 57.25
        np.testing.assert_allclose(logistic_losses(shifted, y),
                                   logistic_losses(Z, y), atol=1e-9)
        np.testing.assert_allclose(disagreement_losses(shifted, y),
                                   disagreement_losses(Z, y), atol=1e-9)

    def test_no_overflow_at_large_magnitudes(self):
        Z = np.array([[1e4, -1e4], [-1e4, 1e4], [1e4, 1e4]])
        y = np.array([0, 0, 1])
        with np.errstate(over="raise"):
            assert np.all(np.isfinite(logistic_losses(Z, y)))
            assert np.all(np.isfinite(disagreement_losses(Z, y)))
            loss, grad = batch_loss_and_logit_grad(Z, y, "disagreement")
        assert np.isfinite(loss) and np.all(np.isfinite(grad))

    def test_logistic_nonnegative_and_one_only_at_uniform(self):
        rng = np.random.default_rng(31)
        Z = rng.normal(size=(500, 3))
        y = rng.integers(0, 3, size=500)
        assert np.all(logistic_losses(Z, y) >= 0.0)


def _fixture_sets(seed=0, n=40):
    rng = np.random.default_rng(seed)
    source_X = rng.normal((-2.0, 0.0), 0.6, size=(n, 2))
    target_X = rng.normal((2.0, 0.0), 0.6, size=(n, 2))
    return source_X, target_X


class TestObjectives:
    def _setup(self):
        source_X, target_X = _fixture_sets()
        y = (source_X[:, 1] > 0).astype(int)
        clf = MlpClassifier(hidden_layer_sizes=(8,), max_epochs=200, random_state=0)
        clf.fit(source_X, y)
        h_hat = clf.model_
        sp = h_hat.predict(source_X)
        tp = h_hat.predict(target_X)
        return h_hat, source_X, sp, target_X, tp

    def test_self_critic_has_small_source_large_target_term(self):
        h_hat, source_X, sp, target_X, tp = self._setup()
        src_term, _ = batch_loss_and_logit_grad(h_hat.forward(source_X), sp, "logistic")
        tgt_term, _ = batch_loss_and_logit_grad(h_hat.forward(target_X), tp,
                                                "disagreement")
        assert src_term < 1.0  # confident agreement with own predictions
        assert tgt_term > 1.0  # margin >= 0 on every sample it agrees with

    def test_empty_target_rejected(self):
        h_hat, source_X, sp, _, _ = self._setup()
        with pytest.raises(Exception):
            dis2_objective(h_hat, source_X, sp, np.zeros((0, 2)), np.zeros(0, int))

    def test_unit_weights_reduce_odd_to_dis2(self):
        h_hat, source_X, sp, target_X, tp = self._setup()
        plain = dis2_objective(h_hat, source_X, sp, target_X, tp)
        weighted = odd_objective(h_hat, source_X, sp, target_X, tp,
                                 target_weights=np.ones(len(tp)))
        assert weighted == plain  # bitwise: same code path

    def test_zero_weights_leave_source_term_only(self):
        h_hat, source_X, sp, target_X, tp = self._setup()
        src_term, _ = batch_loss_and_logit_grad(h_hat.forward(source_X), sp, "logistic")
        value = odd_objective(h_hat, source_X, sp, target_X, tp,
                              target_weights=np.zeros(len(tp)))
        assert value == pytest.approx(src_term, abs=1e-15)

    def test_halving_weights_halves_target_term(self):
        h_hat, source_X, sp, target_X, tp = self._setup()
        rng = np.random.default_rng(5)
        w = rng.uniform(0.0, 1.0, size=len(tp))
        src_term, _ = batch_loss_and_logit_grad(h_hat.forward(source_X), sp, "logistic")
        full = odd_objective(h_hat, source_X, sp, target_X, tp, target_weights=w)
        half = odd_objective(h_hat, source_X, sp, target_X, tp, target_weights=w / 2)
        assert half - src_term == pytest.approx((full - src_term) / 2, abs=1e-12)

    def test_monotone_in_each_target_weight(self):
        h_hat, source_X, sp, target_X, tp = self._setup()
        w = np.full(len(tp), 0.5)
        base = odd_objective(h_hat, source_X, sp, target_X, tp, target_weights=w)
        for i in (0, len(tp) // 2, len(tp) - 1):
            bumped = w.copy()
            bumped[i] = 0.9
            assert odd_objective(h_hat, source_X, sp, target_X, tp,
                                 target_weights=bumped) >= base

    def test_weight_validation(self):
        h_hat, source_X, sp, target_X, tp = self._setup()
        with pytest.raises(Exception):
            odd_objective(h_hat, source_X, sp, target_X, tp,
                          target_weights=np.ones(3))
        with pytest.raises(ValueError):
            odd_objective(h_hat, source_X, sp, target_X, tp,
                          target_weights=np.full(len(tp), 1.5))
        with pytest.raises(ValueError):
            odd_objective(h_hat, source_X, sp, target_X, tp,
                          target_weights=np.ones(len(tp)),
                          discount_source=True)  # missing source_weights

    def test_discount_source_weights_source_term(self):
        h_hat, source_X, sp, target_X, tp = self._setup()
        tw = np.ones(len(tp))
        plain = odd_objective(h_hat, source_X, sp, target_X, tp, target_weights=tw)
        discounted = odd_objective(h_hat, source_X, sp, target_X, tp,
                                   target_weights=tw, discount_source=True,
                                   source_weights=np.zeros(len(sp)))
        tgt_term, _ = batch_loss_and_logit_grad(h_hat.forward(target_X), tp,
                                                "disagreement")
        assert discounted == pytest.approx(tgt_term, abs=1e-15)
        assert discounted < plain


def test_objective_works_with_identity_model():
    Z_s = np.array([[2.0, 0.0], [0.0, 2.0]])
    Z_t = np.array([[1.0, -1.0]])
    model = identity_model(2)
    sp = model.predict(Z_s)
    tp = model.predict(Z_t)
    value = dis2_objective(model, Z_s, sp, Z_t, tp)
    assert np.isfinite(value)
