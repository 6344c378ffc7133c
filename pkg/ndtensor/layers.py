"""Регуляризующие слои: dropout и батч-нормализация."""
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .errors import ArgumentError, DegenerateBatchError, DimensionError
from .node import ArrayLike, DiffNode, add, as_node, make_node, mul, parameter

BN_MOMENTUM = 0.9
BN_EPSILON = 1e-5


def dropout(x: ArrayLike, rate: float, training: bool,
            rng: Optional[np.random.Generator] = None) -> DiffNode:
    """
    Инвертированный dropout: сохраненные элементы делятся на (1 - rate).

    Args:
        x: Вход
        rate: Вероятность обнуления, 0 <= rate < 1
        training: В режиме инференса слой тождественный
        rng: Генератор случайных чисел (обязателен при обучении)
    """
    if not 0.0 <= rate < 1.0:
        raise ArgumentError(f"dropout: rate={rate} вне диапазона [0, 1)")
    x = as_node(x)
    if not training or rate == 0.0:
        return x
    if rng is None:
        raise ArgumentError("dropout: в режиме обучения нужен генератор rng")
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return mul(x, mask)


@dataclass
class BatchNormState:
    """Параметры и бегущие статистики батч-нормализации по последней оси."""
    scale: DiffNode
    shift: DiffNode
    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = BN_MOMENTUM
    epsilon: float = BN_EPSILON

    @classmethod
    def create(cls, num_features: int, name: str = "norm") -> "BatchNormState":
        return cls(
            scale=parameter(np.ones(num_features), name=f"{name}.scale"),
            shift=parameter(np.zeros(num_features), name=f"{name}.shift"),
            running_mean=np.zeros(num_features),
            running_var=np.ones(num_features),
        )

    @property
    def num_features(self) -> int:
        return self.scale.shape[0]

    def buffers(self, name: str = "norm") -> Dict[str, np.ndarray]:
        return {f"{name}.running_mean": self.running_mean, f"{name}.running_var": self.running_var}


def _normalize_batch(x: DiffNode, epsilon: float):
    features = x.shape[-1]
    rows = x.values.reshape(-1, features)
    count = rows.shape[0]
    if count < 2:
        raise DegenerateBatchError("batch_norm: дисперсия по батчу из одной строки не определена")
    mean = rows.mean(axis=0)
    var = rows.var(axis=0)
    inv_std = 1.0 / np.sqrt(var + epsilon)
    normalized = (rows - mean) * inv_std

    def _backward(g):
        g_rows = g.reshape(-1, features)
        grad = inv_std / count * (
            count * g_rows - g_rows.sum(axis=0) - normalized * (g_rows * normalized).sum(axis=0))
        return (grad.reshape(x.shape),)

    node = make_node(normalized.reshape(x.shape), (x,), _backward, "batch_norm")
    return node, mean, var


def batch_norm(x: ArrayLike, state: BatchNormState, training: bool) -> DiffNode:
    """
    Нормализация каждого признака по всем ведущим осям (батч и время).

    При обучении используются статистики батча и обновляются бегущие
    (momentum 0.9), при инференсе - только бегущие статистики.
    """
    x = as_node(x)
    if x.shape[-1] != state.num_features:
        raise DimensionError(f"batch_norm: вход {x.dims} не согласован с {state.num_features} признаками")
    if training:
        normalized, mean, var = _normalize_batch(x, state.epsilon)
        state.running_mean = state.momentum * state.running_mean + (1.0 - state.momentum) * mean
        state.running_var = state.momentum * state.running_var + (1.0 - state.momentum) * var
    else:
        inv_std = 1.0 / np.sqrt(state.running_var + state.epsilon)
        normalized = mul(add(x, -state.running_mean), inv_std)
    return add(mul(normalized, state.scale), state.shift)
