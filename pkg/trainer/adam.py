"""Оптимизатор Adam с коррекцией смещения моментов."""
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional

import numpy as np

from ndtensor import DiffNode


class NonFiniteGradientError(ArithmeticError):
    """Градиент параметра содержит NaN или бесконечность."""

    def __init__(self, name: str, gradient: np.ndarray):
        bad = int(np.count_nonzero(~np.isfinite(gradient)))
        super().__init__(f"Нечисловой градиент параметра '{name}': {bad} из {gradient.size} элементов")
        self.name = name


@dataclass
class AdamState:
    """Моменты по каждому параметру и счетчик шагов."""
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    first_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: Dict[str, np.ndarray] = field(default_factory=dict)

    def hyperparameters(self) -> Dict[str, float]:
        return {"beta1": self.beta1, "beta2": self.beta2, "epsilon": self.epsilon}


def adam_step(params: Mapping[str, DiffNode], grads: Mapping[str, Optional[np.ndarray]], state: AdamState,
              learning_rate: float, scales: Optional[Mapping[str, float]] = None):
    """
    Один шаг Adam на месте.

    Все градиенты проверяются до обновления: при нечисловом градиенте
    ни один параметр не меняется.

    Args:
        params: Параметры по именам
        grads: Градиенты по тем же именам (None - параметр пропускается)
        state: Состояние оптимизатора
        learning_rate: Шаг η
        scales: Множители шага по именам параметров (по умолчанию 1)
    """
    for name, grad in grads.items():
        if grad is None:
            continue
        if grad.shape != params[name].shape:
            raise ValueError(f"Градиент '{name}' формы {grad.shape} для параметра {params[name].shape}")
        if not np.all(np.isfinite(grad)):
            raise NonFiniteGradientError(name, grad)

    state.step += 1
    correction1 = 1.0 - state.beta1 ** state.step
    correction2 = 1.0 - state.beta2 ** state.step
    for name, node in params.items():
        grad = grads.get(name)
        if grad is None:
            continue
        m = state.first_moment.get(name)
        v = state.second_moment.get(name)
        if m is None:
            m, v = np.zeros_like(node.values), np.zeros_like(node.values)
        m = state.beta1 * m + (1.0 - state.beta1) * grad
        v = state.beta2 * v + (1.0 - state.beta2) * grad * grad
        state.first_moment[name], state.second_moment[name] = m, v
        step = learning_rate * (scales.get(name, 1.0) if scales else 1.0)
        node.values = node.values - step * (m / correction1) / (np.sqrt(v / correction2) + state.epsilon)


def clip_grad_norm(grads: Mapping[str, Optional[np.ndarray]], max_norm: float) -> float:
    """Масштабирует градиенты на месте до общей нормы max_norm; возвращает исходную норму."""
    total = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values() if g is not None)))
    if total > max_norm > 0:
        scale = max_norm / total
        for g in grads.values():
            if g is not None:
                g *= scale
    return total
