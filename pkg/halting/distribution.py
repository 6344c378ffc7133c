"""Распределение остановки: δ_t, бюджет B_t и вероятность решения P(t)."""
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Protocol, Sequence, Union

import numpy as np
from loguru import logger

from ndtensor import (ArgumentError, DiffNode, DimensionError, as_node, clip, concat, cumprod, linear, mul,
                      reshape, sigmoid)

# Ограничение δ внутри произведений: бюджет не обнуляется раньше T
DELTA_FLOOR = 1e-7
# Смещение головы остановки при инициализации "поздних" решений
LATE_BIAS = -5.0


class StopMode(str, Enum):
    """Способ выбора момента остановки на инференсе."""
    BERNOULLI = "bernoulli"
    THRESHOLD = "threshold"
    EXPECTED = "expected"


class StoppingHead(Protocol):
    weight: DiffNode
    bias: DiffNode


@dataclass
class HaltingTrace:
    """
    Трасса остановки по всем моментам 0..T.

    delta хранит эффективные δ_t (после ограничения и с δ_T = 1),
    по которым вычислены budget и halt_prob. Поддерживает батч: [..., N].
    """
    delta: DiffNode
    budget: DiffNode
    halt_prob: DiffNode

    @property
    def length(self) -> int:
        return self.delta.shape[-1]

    def arrays(self):
        return self.delta.values, self.budget.values, self.halt_prob.values

    def to_rows(self) -> List[Dict[str, float]]:
        if self.delta.ndim != 1:
            raise DimensionError(f"to_rows: ожидается трасса одного ряда, получено {self.delta.dims}")
        delta, budget, halt_prob = self.arrays()
        return [{"t": t, "delta": float(delta[t]), "budget": float(budget[t]), "halt_prob": float(halt_prob[t])}
                for t in range(self.length)]


def halting_weights(delta) -> HaltingTrace:
    """
    Дифференцируемое построение P(t) = δ_t·B_{t-1} по последней оси.

    Последний δ принудительно равен 1, поэтому бюджет исчерпывается
    в момент T и сумма P(t) равна единице.

    Args:
        delta: Вероятности остановки [..., N]

    Returns:
        HaltingTrace: эффективные δ, бюджет и P(t) той же формы
    """
    delta = as_node(delta)
    if delta.ndim < 1 or delta.shape[-1] < 1:
        raise ArgumentError("halting_weights: пустая последовательность δ")
    length = delta.shape[-1]
    lead = delta.shape[:-1]
    ones = np.ones(lead + (1,))
    zeros = np.zeros(lead + (1,))
    if length == 1:
        return HaltingTrace(delta=DiffNode(ones), budget=DiffNode(zeros), halt_prob=DiffNode(ones))

    clamped = clip(delta[..., :length - 1], DELTA_FLOOR, 1.0 - DELTA_FLOOR)
    survive = cumprod(1.0 - clamped, axis=-1)
    previous_budget = concat([ones, survive], axis=-1)
    effective = concat([clamped, ones], axis=-1)
    return HaltingTrace(delta=effective,
                        budget=concat([survive, zeros], axis=-1),
                        halt_prob=mul(effective, previous_budget))


def halting_distribution(delta: Union[Sequence[float], np.ndarray, DiffNode],
                         length: Optional[int] = None) -> HaltingTrace:
    """
    Распределение остановки одного ряда.

    Args:
        delta: δ_0..δ_T из [0, 1]; значение δ_T игнорируется
        length: Ожидаемая длина N (проверяется, если задана)

    Returns:
        HaltingTrace: δ_t, B_t и P(t)
    """
    node = as_node(delta)
    if node.ndim != 1 or node.shape[0] < 1:
        raise ArgumentError(f"halting_distribution: ожидается непустая последовательность δ, получено {node.shape}")
    if length is not None and node.shape[0] != length:
        raise ArgumentError(f"halting_distribution: длина δ {node.shape[0]} не равна N={length}")
    values = node.values
    if not np.all(np.isfinite(values)) or values.min() < 0.0 or values.max() > 1.0:
        raise ArgumentError("halting_distribution: δ должны лежать в [0, 1]")
    return halting_weights(node)


def stop_probability(h, head: StoppingHead) -> DiffNode:
    """
    δ_t = σ(θ_δ h_t).

    Args:
        h: Скрытый вектор [..., H]
        head: Голова остановки с весами [H, 1] и смещением [1]

    Returns:
        DiffNode: Вероятности остановки формы h.shape[:-1]
    """
    h = as_node(h)
    if head.weight.ndim != 2 or head.weight.shape[1] != 1:
        raise DimensionError(f"stop_probability: голова остановки должна иметь один выход, веса {head.weight.dims}")
    if h.shape[-1] != head.weight.shape[0]:
        raise DimensionError(
            f"stop_probability: h размерности {h.shape[-1]}, голова ожидает {head.weight.shape[0]}")
    out = sigmoid(linear(h, head.weight, head.bias))
    return reshape(out, out.shape[:-1])


def init_late(head: StoppingHead, bias: float = LATE_BIAS):
    """Обнуляет веса головы остановки и задает отрицательное смещение: решения смещаются к концу ряда."""
    head.weight.values = np.zeros_like(head.weight.values)
    head.bias.values = np.full_like(head.bias.values, bias)
    head.weight.grad = None
    head.bias.grad = None
    logger.debug(f"Голова остановки инициализирована: bias={bias}")


def sample_stops(delta: np.ndarray, halt_prob: np.ndarray, mode: Union[StopMode, str],
                 rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """
    Моменты остановки для батча трасс [B, N].

    Args:
        delta: Эффективные δ (последний столбец равен 1)
        halt_prob: P(t)
        mode: bernoulli, threshold или expected
        rng: Генератор случайных чисел (обязателен для bernoulli)

    Returns:
        np.ndarray: Индексы t_stop из [0, N-1]
    """
    mode = StopMode(mode)
    delta = np.atleast_2d(np.asarray(delta, dtype=np.float64))
    halt_prob = np.atleast_2d(np.asarray(halt_prob, dtype=np.float64))
    last = delta.shape[-1] - 1
    if mode is StopMode.BERNOULLI:
        if rng is None:
            raise ArgumentError("sample_stops: режим bernoulli требует генератор")
        draws = rng.random(delta.shape) < delta
        draws[..., last] = True
        return draws.argmax(axis=-1)
    if mode is StopMode.THRESHOLD:
        reached = delta >= 0.5
        reached[..., last] = True
        return reached.argmax(axis=-1)
    expected = (halt_prob * np.arange(last + 1)).sum(axis=-1)
    return np.clip(np.floor(expected + 0.5), 0, last).astype(np.int64)


def sample_stop(trace: HaltingTrace, mode: Union[StopMode, str] = StopMode.BERNOULLI,
                rng: Optional[np.random.Generator] = None) -> int:
    """Момент остановки t_stop одного ряда."""
    delta, _, halt_prob = trace.arrays()
    return int(sample_stops(delta, halt_prob, mode, rng)[0])
