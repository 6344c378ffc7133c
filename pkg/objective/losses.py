"""Функции потерь и стоимость решения с компромиссом α между точностью и ранностью."""
from dataclasses import dataclass
from typing import Dict, Iterable, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from halting import HaltingTrace
from ndtensor import (DiffNode, DimensionError, add, as_node, log_softmax, mean_all, mul, neg, pick, sum_axis)

ClassLoss = Literal["linear", "cross_entropy"]


class TradeOff(BaseModel):
    """Вес α классификационной составляющей стоимости."""
    model_config = ConfigDict(frozen=True)

    alpha: float = Field(..., ge=0.0, le=1.0)


@dataclass(frozen=True)
class DecisionOutcome:
    """Решение по одному ряду: предсказанный и истинный класс, момент t и последний индекс T."""
    predicted: int
    truth: int
    t: int
    T: int

    def __post_init__(self):
        if not 0 <= self.t <= self.T:
            raise ValueError(f"Момент решения t={self.t} вне [0, {self.T}]")


def earliness_loss(t: int, T: int) -> float:
    """L_e(t) = t/T, для T = 0 равна нулю."""
    if T == 0:
        return 0.0
    if not 0 <= t <= T:
        raise ValueError(f"earliness_loss: t={t} вне [0, {T}]")
    return t / T


def earliness_ramp(length: int) -> np.ndarray:
    """L_e для всех префиксов ряда длины N."""
    if length <= 1:
        return np.zeros(max(length, 0))
    return np.arange(length) / (length - 1)


def evaluation_cost(outcome: DecisionOutcome, tradeoff: TradeOff) -> float:
    """
    Стоимость решения: α·[ŷ ≠ y] + (1 - α)·t/T.

    Args:
        outcome: Результат классификации ряда
        tradeoff: Вес α

    Returns:
        float: Стоимость из [0, 1]
    """
    alpha = tradeoff.alpha
    mistake = 1.0 if outcome.predicted != outcome.truth else 0.0
    return alpha * mistake + (1.0 - alpha) * earliness_loss(outcome.t, outcome.T)


def _labels_for(values: DiffNode, labels) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    lead = values.shape[:-1]
    if labels.shape == lead:
        return labels
    if labels.ndim > len(lead) or lead[:labels.ndim] != labels.shape:
        raise DimensionError(f"Метки формы {labels.shape} не согласованы с {values.dims}")
    return np.broadcast_to(labels.reshape(labels.shape + (1,) * (len(lead) - labels.ndim)), lead)


def linear_class_loss(probs, labels) -> DiffNode:
    """
    L_c = 1 - ŷ⁺, где ŷ⁺ - вероятность истинного класса.

    Args:
        probs: Вероятности [..., C]
        labels: Индексы классов; размножаются по оставшимся осям (например, [B] для [B, N, C])
    """
    probs = as_node(probs)
    return 1.0 - pick(probs, _labels_for(probs, labels))


def cross_entropy_loss(logits, labels) -> DiffNode:
    """-log ŷ⁺ из логитов через log-sum-exp."""
    logits = as_node(logits)
    return neg(pick(log_softmax(logits), _labels_for(logits, labels)))


def decision_loss(probs, label: int, t: int, T: int, tradeoff: TradeOff) -> DiffNode:
    """L_t = α·L_c(ŷ_t, y) + (1 - α)·t/T для решения в момент t."""
    alpha = tradeoff.alpha
    return add(mul(alpha, linear_class_loss(probs, label)), (1.0 - alpha) * earliness_loss(t, T))


@dataclass
class LossTerms:
    """Ожидаемая потеря и ее составляющие (средние по батчу)."""
    total: DiffNode
    classification: DiffNode
    earliness: DiffNode

    def as_floats(self) -> Dict[str, float]:
        return {"loss": self.total.item(), "cls_loss": self.classification.item(),
                "earliness_loss": self.earliness.item()}


def expected_loss_terms(class_losses, trace: HaltingTrace, tradeoff: TradeOff,
                        earliness: Optional[np.ndarray] = None) -> LossTerms:
    """
    Математическое ожидание L_t по моментам решения.

    Args:
        class_losses: L_c(t) формы [..., N]
        trace: Трасса остановки той же формы
        tradeoff: Вес α
        earliness: L_e(t) формы [N]; по умолчанию t/T

    Returns:
        LossTerms: total = α·cls + (1 - α)·earliness, каждое слагаемое усреднено по батчу
    """
    class_losses = as_node(class_losses)
    halt_prob = trace.halt_prob
    if class_losses.shape != halt_prob.shape:
        raise DimensionError(
            f"expected_loss: потери {class_losses.dims} не согласованы с трассой {halt_prob.dims}")
    length = halt_prob.shape[-1]
    if earliness is None:
        earliness = earliness_ramp(length)
    earliness = np.asarray(earliness, dtype=np.float64)
    if earliness.shape != (length,):
        raise DimensionError(f"expected_loss: L_e длины {earliness.shape} вместо {length}")

    alpha = tradeoff.alpha
    classification = mean_all(sum_axis(mul(halt_prob, class_losses), axis=-1))
    earliness_part = mean_all(sum_axis(mul(halt_prob, earliness), axis=-1))
    total = add(mul(alpha, classification), mul(1.0 - alpha, earliness_part))
    return LossTerms(total=total, classification=classification, earliness=earliness_part)


def expected_loss(class_losses, trace: HaltingTrace, tradeoff: TradeOff,
                  earliness: Optional[np.ndarray] = None) -> DiffNode:
    return expected_loss_terms(class_losses, trace, tradeoff, earliness).total


def uniform_prefix_cross_entropy(logits, labels) -> DiffNode:
    """
    Потеря чистой классификации: среднее cross-entropy по всем префиксам и рядам.

    Эквивалентна ожиданию при равномерном законе P(t); голова остановки
    в граф не входит.

    Args:
        logits: Логиты [B, N, C] (или [N, C])
        labels: Классы [B] (или скаляр)
    """
    return mean_all(cross_entropy_loss(logits, labels))


def loss_curves(points: Iterable[float]) -> List[Dict[str, float]]:
    """Потери 0-1, линейная и cross-entropy как функции вероятности истинного класса ŷ⁺."""
    rows = []
    for p in points:
        p = float(p)
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"loss_curves: ŷ⁺={p} вне [0, 1]")
        rows.append({
            "p_true": p,
            "zero_one": 0.0 if p > 0.5 else 1.0,
            "linear": 1.0 - p,
            "cross_entropy": float(-np.log(p)) if p > 0.0 else float("inf"),
        })
    return rows
