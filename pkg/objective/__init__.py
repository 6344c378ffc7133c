"""Потери обучения и стоимость решения."""
from .losses import (ClassLoss, DecisionOutcome, LossTerms, TradeOff, cross_entropy_loss, decision_loss,
                     earliness_loss, earliness_ramp, evaluation_cost, expected_loss, expected_loss_terms,
                     linear_class_loss, loss_curves, uniform_prefix_cross_entropy)

__all__ = [
    "ClassLoss", "DecisionOutcome", "LossTerms", "TradeOff", "cross_entropy_loss", "decision_loss",
    "earliness_loss", "earliness_ramp", "evaluation_cost", "expected_loss", "expected_loss_terms",
    "linear_class_loss", "loss_curves", "uniform_prefix_cross_entropy",
]
