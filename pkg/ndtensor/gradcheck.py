"""Проверка градиентов центральными разностями."""
from typing import Callable, Sequence

import numpy as np
from loguru import logger

from .errors import NumericError
from .node import DiffNode, backward, no_grad, zero_grad

DEFAULT_STEP = 1e-5
ABSOLUTE_FLOOR = 1e-8


def _evaluate(builder: Callable[[], DiffNode]) -> float:
    with no_grad():
        value = builder().item()
    if not np.isfinite(value):
        raise NumericError(f"check_gradients: нечисловое значение функции ({value})")
    return value


def check_gradients(builder: Callable[[], DiffNode], leaves: Sequence[DiffNode],
                    step: float = DEFAULT_STEP, floor: float = ABSOLUTE_FLOOR) -> float:
    """
    Сравнивает градиенты backward() с центральными разностями.

    Args:
        builder: Функция без аргументов, строящая скалярный граф из листьев
        leaves: Листья, по которым проверяется градиент
        step: Шаг разностной схемы
        floor: Абсолютный нижний порог знаменателя

    Returns:
        float: Наибольшая относительная ошибка
    """
    zero_grad(leaves)
    root = builder()
    if not np.isfinite(root.values).all():
        raise NumericError("check_gradients: нечисловое значение в корне графа")
    backward(root)
    analytic = [leaf.grad.copy() if leaf.grad is not None else np.zeros(leaf.shape) for leaf in leaves]

    worst = 0.0
    for leaf, grad in zip(leaves, analytic):
        for index in np.ndindex(*leaf.shape):
            original = leaf.values[index]
            leaf.values[index] = original + step
            upper = _evaluate(builder)
            leaf.values[index] = original - step
            lower = _evaluate(builder)
            leaf.values[index] = original
            numeric = (upper - lower) / (2.0 * step)
            error = abs(grad[index] - numeric) / max(abs(grad[index]), abs(numeric), floor)
            worst = max(worst, error)
    logger.debug(f"check_gradients: максимальная относительная ошибка {worst:.3e}")
    return worst
