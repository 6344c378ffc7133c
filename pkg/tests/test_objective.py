"""Тесты потерь и стоимости решения."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from halting import HaltingTrace, halting_distribution, halting_weights
from ndtensor import DiffNode, DimensionError, backward, check_gradients, parameter, softmax_rows, zero_grad
from objective import (DecisionOutcome, TradeOff, cross_entropy_loss, decision_loss, earliness_loss, earliness_ramp,
                       evaluation_cost, expected_loss, expected_loss_terms, linear_class_loss, loss_curves,
                       uniform_prefix_cross_entropy)


def _one_hot_trace(length: int, t_stop: int) -> HaltingTrace:
    halt_prob = np.zeros(length)
    halt_prob[t_stop] = 1.0
    return HaltingTrace(delta=DiffNode(halt_prob), budget=DiffNode(np.zeros(length)), halt_prob=DiffNode(halt_prob))


# стоимость решения

@pytest.mark.parametrize("predicted, truth, t, T, alpha, expected", [
    (1, 1, 0, 100, 0.8, 0.0),
    (0, 1, 100, 100, 0.8, 1.0),
    (0, 1, 50, 100, 0.8, 0.9),
    (1, 1, 85, 100, 0.0, 0.85),
])
def test_evaluation_cost(predicted, truth, t, T, alpha, expected):
    outcome = DecisionOutcome(predicted=predicted, truth=truth, t=t, T=T)
    assert evaluation_cost(outcome, TradeOff(alpha=alpha)) == pytest.approx(expected, abs=1e-12)


def test_earliness_loss_values():
    assert earliness_loss(0, 100) == 0.0
    assert earliness_loss(100, 100) == 1.0
    assert earliness_loss(85, 100) == pytest.approx(0.85)
    assert earliness_loss(0, 0) == 0.0
    np.testing.assert_allclose(earliness_ramp(5), [0.0, 0.25, 0.5, 0.75, 1.0])
    np.testing.assert_array_equal(earliness_ramp(1), [0.0])


def test_invalid_decisions_are_rejected():
    with pytest.raises(ValidationError):
        TradeOff(alpha=1.2)
    with pytest.raises(ValueError):
        DecisionOutcome(predicted=0, truth=0, t=5, T=4)
    with pytest.raises(ValueError):
        earliness_loss(-1, 4)


# потери классификации

def test_linear_class_loss_values():
    assert linear_class_loss([0.0, 1.0], 1).item() == 0.0
    assert linear_class_loss([1.0, 0.0], 1).item() == 1.0
    assert linear_class_loss(np.full(4, 0.25), 2).item() == pytest.approx(0.75)


def test_class_losses_broadcast_labels(rng):
    probs = softmax_rows(rng.normal(size=(3, 5, 4)))
    labels = np.array([0, 3, 1])
    losses = linear_class_loss(probs, labels).values
    assert losses.shape == (3, 5)
    np.testing.assert_allclose(losses[1], 1.0 - probs.values[1, :, 3])
    with pytest.raises(DimensionError):
        linear_class_loss(probs, np.array([0, 1]))


def test_cross_entropy_values():
    assert cross_entropy_loss([0.0, 0.0, 0.0], 1).item() == pytest.approx(math.log(3.0))
    assert cross_entropy_loss([60.0, -60.0], 0).item() == pytest.approx(0.0, abs=1e-40)
    assert np.isfinite(cross_entropy_loss([-800.0, 800.0], 0).item())


def test_cross_entropy_gradcheck(rng):
    logits = parameter(rng.normal(size=(4, 3)))
    labels = np.array([0, 2, 1, 1])
    assert check_gradients(lambda: uniform_prefix_cross_entropy(logits, labels), [logits]) < 1e-6


def test_decision_loss_limits():
    probs = [0.8, 0.2]
    assert decision_loss(probs, 0, 50, 100, TradeOff(alpha=1.0)).item() == pytest.approx(0.2)
    assert decision_loss(probs, 0, 50, 100, TradeOff(alpha=0.0)).item() == pytest.approx(0.5)
    assert decision_loss(probs, 0, 50, 100, TradeOff(alpha=0.8)).item() == pytest.approx(0.26)


# ожидаемая потеря

def test_expected_loss_direct_evaluation():
    trace = halting_distribution([0.5, 0.3])
    loss = expected_loss(np.array([0.2, 0.0]), trace, TradeOff(alpha=0.8))
    assert loss.item() == pytest.approx(0.18, abs=1e-12)


def test_expected_loss_one_hot_equals_decision_loss(rng):
    probs = softmax_rows(rng.normal(size=(3, 2))).values
    class_losses = linear_class_loss(probs, 1)
    tradeoff = TradeOff(alpha=0.7)
    trace = halting_distribution([0.0, 1.0, 0.4])
    expected = decision_loss(probs[1], 1, 1, 2, tradeoff).item()
    assert expected_loss(class_losses, trace, tradeoff).item() == pytest.approx(expected, abs=1e-6)


def test_expected_loss_uniform_is_mean_of_decision_losses(rng):
    probs = softmax_rows(rng.normal(size=(4, 3))).values
    tradeoff = TradeOff(alpha=0.6)
    trace = halting_distribution([1 / 4, 1 / 3, 1 / 2, 1.0])
    np.testing.assert_allclose(trace.halt_prob.values, np.full(4, 0.25), atol=1e-15)
    mean = np.mean([decision_loss(probs[t], 2, t, 3, tradeoff).item() for t in range(4)])
    assert expected_loss(linear_class_loss(probs, 2), trace, tradeoff).item() == pytest.approx(mean, abs=1e-12)


@given(st.lists(st.tuples(st.floats(0.0, 1.0), st.floats(0.0, 1.0)), min_size=1, max_size=40),
       st.floats(0.0, 1.0))
@settings(max_examples=150, deadline=None)
def test_expected_linear_loss_is_bounded(pairs, alpha):
    delta = np.array([pair[0] for pair in pairs])
    true_prob = np.array([pair[1] for pair in pairs])
    loss = expected_loss(1.0 - true_prob, halting_distribution(delta), TradeOff(alpha=alpha)).item()
    assert -1e-12 <= loss <= 1.0 + 1e-12


def test_expected_loss_is_permutation_invariant(rng):
    halt_prob = rng.dirichlet(np.ones(7))
    class_losses = rng.uniform(size=7)
    earliness = earliness_ramp(7)
    perm = rng.permutation(7)
    tradeoff = TradeOff(alpha=0.4)

    def _trace(p):
        return HaltingTrace(delta=DiffNode(p), budget=DiffNode(np.zeros(7)), halt_prob=DiffNode(p))

    original = expected_loss(class_losses, _trace(halt_prob), tradeoff, earliness).item()
    permuted = expected_loss(class_losses[perm], _trace(halt_prob[perm]), tradeoff, earliness[perm]).item()
    assert permuted == pytest.approx(original, abs=1e-14)


@pytest.mark.parametrize("alpha", [0.0, 0.5, 0.9, 1.0])
def test_evaluation_cost_matches_one_hot_expectation(alpha, rng):
    tradeoff = TradeOff(alpha=alpha)
    for _ in range(20):
        length = int(rng.integers(1, 12))
        t_stop = int(rng.integers(0, length))
        predicted, truth = (int(v) for v in rng.integers(0, 3, size=2))
        cost = evaluation_cost(DecisionOutcome(predicted=predicted, truth=truth, t=t_stop, T=length - 1), tradeoff)
        indicator = np.full(length, float(predicted != truth))
        expectation = expected_loss(indicator, _one_hot_trace(length, t_stop), tradeoff).item()
        assert expectation == pytest.approx(cost, abs=1e-12)


def test_loss_terms_shape_checks():
    trace = halting_distribution([0.5, 0.5, 0.5])
    with pytest.raises(DimensionError):
        expected_loss_terms(np.zeros(2), trace, TradeOff(alpha=0.5))
    with pytest.raises(DimensionError):
        expected_loss_terms(np.zeros(3), trace, TradeOff(alpha=0.5), earliness=np.zeros(4))


def test_loss_terms_combine_components(rng):
    trace = halting_weights(rng.uniform(size=(3, 6)))
    terms = expected_loss_terms(rng.uniform(size=(3, 6)), trace, TradeOff(alpha=0.3)).as_floats()
    assert terms["loss"] == pytest.approx(0.3 * terms["cls_loss"] + 0.7 * terms["earliness_loss"], abs=1e-14)


# поток градиентов к голове остановки

def _labels(batch: int) -> np.ndarray:
    return np.arange(batch) % 2


def test_weighted_loss_reaches_stopping_head(tiny_conv_model):
    rng = np.random.default_rng(17)
    for _ in range(100):
        zero_grad(tiny_conv_model.parameters().values())
        output = tiny_conv_model.forward(rng.normal(size=(3, 9, 1)))
        class_losses = linear_class_loss(softmax_rows(output.logits), _labels(3))
        backward(expected_loss(class_losses, halting_weights(output.delta), TradeOff(alpha=0.8)))
        assert np.abs(tiny_conv_model.stopping.weight.grad).max() > 0.0


def test_uniform_loss_leaves_stopping_head_untouched(tiny_lstm_model, rng):
    output = tiny_lstm_model.forward(rng.normal(size=(3, 9, 1)))
    backward(uniform_prefix_cross_entropy(output.logits, _labels(3)))
    assert tiny_lstm_model.stopping.weight.grad is None
    assert tiny_lstm_model.stopping.bias.grad is None
    assert tiny_lstm_model.classifier.weight.grad is not None


def test_constant_losses_give_no_timing_preference(tiny_conv_model, rng):
    output = tiny_conv_model.forward(rng.normal(size=(2, 7, 1)))
    zero_grad(tiny_conv_model.parameters().values())
    backward(expected_loss(np.full((2, 7), 0.35), halting_weights(output.delta), TradeOff(alpha=1.0)))
    np.testing.assert_allclose(tiny_conv_model.stopping.weight.grad, 0.0, atol=1e-12)
    np.testing.assert_allclose(tiny_conv_model.stopping.bias.grad, 0.0, atol=1e-12)


def test_loss_curves_rows():
    rows = loss_curves([0.0, 0.5, 1.0])
    assert rows[0]["cross_entropy"] == float("inf")
    assert [row["zero_one"] for row in rows] == [1.0, 1.0, 0.0]
    assert rows[1]["linear"] == 0.5
    with pytest.raises(ValueError):
        loss_curves([1.5])
