"""Сверточная shapelet-модель: причинные свертки и max-pooling по префиксу."""
from typing import Dict, List, Optional

import numpy as np

from ndtensor import (ArgumentError, BatchNormState, DiffNode, as_node, batch_norm, concat_features, conv1d_causal,
                      dropout, parameter, prefix_max_all, prefix_max_pool, reshape)

from .configs import ConvShapeletConfig


class ConvShapeletBackbone:
    """
    Блоки одномерных сверток с растущей шириной ядра.

    Блок l (с единицы) использует d ядер ширины w^l = l·δ_w. Карты признаков
    сворачиваются max-pooling'ом по префиксу до момента t и склеиваются в h_t
    размерности L·d, после чего применяются батч-нормализация и dropout.
    """

    def __init__(self, config: ConvShapeletConfig, rng: np.random.Generator):
        self.config = config
        self.kernels: List[DiffNode] = []
        self.biases: List[DiffNode] = []
        for block in range(1, config.num_blocks + 1):
            width = config.kernel_width(block)
            bound = 1.0 / np.sqrt(width * config.input_dim)
            shape = (width, config.input_dim, config.kernels_per_block)
            self.kernels.append(parameter(rng.uniform(-bound, bound, shape), name=f"conv.block{block}.kernel"))
            self.biases.append(parameter(rng.uniform(-bound, bound, config.kernels_per_block),
                                         name=f"conv.block{block}.bias"))
        self.norm = BatchNormState.create(config.hidden_dim, name="conv.norm")

    @property
    def hidden_dim(self) -> int:
        return self.config.hidden_dim

    def parameters(self) -> Dict[str, DiffNode]:
        params = {}
        for kernel, bias in zip(self.kernels, self.biases):
            params[kernel.name] = kernel
            params[bias.name] = bias
        params[self.norm.scale.name] = self.norm.scale
        params[self.norm.shift.name] = self.norm.shift
        return params

    def buffers(self) -> Dict[str, np.ndarray]:
        return self.norm.buffers("conv.norm")

    def load_buffers(self, buffers: Dict[str, np.ndarray]):
        self.norm.running_mean = np.array(buffers["conv.norm.running_mean"], dtype=np.float64)
        self.norm.running_var = np.array(buffers["conv.norm.running_var"], dtype=np.float64)

    def feature_maps(self, x: DiffNode) -> List[DiffNode]:
        """Карты признаков f^l всех блоков, [..., N, d] каждая."""
        return [conv1d_causal(x, kernel, bias) for kernel, bias in zip(self.kernels, self.biases)]

    def _regularize(self, features: DiffNode, training: bool, rng: Optional[np.random.Generator]) -> DiffNode:
        normalized = batch_norm(features, self.norm, training)
        return dropout(normalized, self.config.dropout_rate, training, rng)

    def running_maxima(self, x) -> List[DiffNode]:
        """Состояние модели: бегущие максимумы каждого блока до всех t."""
        return [prefix_max_all(f) for f in self.feature_maps(as_node(x))]

    def conv_hidden(self, x, t: int, training: bool = False,
                    rng: Optional[np.random.Generator] = None) -> DiffNode:
        """
        Скрытый вектор h_t по наблюдениям x_0..x_t.

        Args:
            x: Ряд [N, D] или батч [B, N, D]
            t: Индекс момента наблюдения
            training: Режим обучения (статистики батча и dropout)
            rng: Генератор для dropout

        Returns:
            DiffNode: [L·d] или [B, L·d]
        """
        x = as_node(x)
        length = x.shape[-2]
        if not 0 <= t < length:
            raise IndexError(f"conv_hidden: индекс {t} вне диапазона [0, {length - 1}]")
        pooled = [prefix_max_pool(f, t) for f in self.feature_maps(x)]
        features = concat_features(pooled)
        if features.ndim == 1:
            return self._regularize(reshape(features, (1, -1)), training, rng)[0]
        return self._regularize(features, training, rng)

    def all_prefix_hidden(self, x, training: bool = False,
                          rng: Optional[np.random.Generator] = None) -> DiffNode:
        """Последовательность h_0..h_{N-1}: свертки один раз, максимумы инкрементально."""
        x = as_node(x)
        if x.ndim < 2 or x.shape[-2] < 1:
            raise ArgumentError("all_prefix_hidden: пустой ряд")
        features = concat_features(self.running_maxima(x))
        return self._regularize(features, training, rng)
