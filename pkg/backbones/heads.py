"""Линейные выходные головы: классификация θ_cl и остановка θ_δ."""
from dataclasses import dataclass
from typing import Dict

import numpy as np

from ndtensor import DiffNode, DimensionError, linear, parameter, softmax_rows


@dataclass
class LinearHead:
    """Линейный слой h_t -> K выходов."""
    weight: DiffNode
    bias: DiffNode

    @classmethod
    def create(cls, in_dim: int, out_dim: int, rng: np.random.Generator, name: str) -> "LinearHead":
        bound = 1.0 / np.sqrt(in_dim)
        return cls(weight=parameter(rng.uniform(-bound, bound, (in_dim, out_dim)), name=f"{name}.weight"),
                   bias=parameter(rng.uniform(-bound, bound, out_dim), name=f"{name}.bias"))

    @property
    def in_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[1]

    def parameters(self) -> Dict[str, DiffNode]:
        return {self.weight.name: self.weight, self.bias.name: self.bias}

    def __call__(self, h) -> DiffNode:
        return linear(h, self.weight, self.bias)


def classify(h, head: LinearHead) -> DiffNode:
    """
    Вероятности классов ŷ_t = softmax(θ_cl h_t).

    Args:
        h: Скрытый вектор [..., H]
        head: Голова классификации

    Returns:
        DiffNode: Вероятности [..., C], сумма по последней оси равна 1
    """
    if h.shape[-1] != head.in_dim:
        raise DimensionError(f"classify: h размерности {h.shape[-1]}, голова ожидает {head.in_dim}")
    return softmax_rows(head(h))
