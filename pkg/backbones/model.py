"""Модель ранней классификации: бэкбон, голова классов и голова остановки."""
from dataclasses import dataclass
from typing import Dict, Optional, Tuple, Union

import numpy as np

from halting import stop_probability
from ndtensor import ArgumentError, DiffNode, as_node, no_grad, softmax_rows

from .configs import ModelConfig
from .conv_shapelet import ConvShapeletBackbone
from .heads import LinearHead
from .lstm import StackedLstmBackbone

Backbone = Union[ConvShapeletBackbone, StackedLstmBackbone]


@dataclass
class ModelOutput:
    """Выходы модели на всех префиксах."""
    hidden: DiffNode
    logits: DiffNode
    delta: DiffNode


def build_backbone(config: ModelConfig, rng: np.random.Generator) -> Backbone:
    if config.backbone == "conv":
        return ConvShapeletBackbone(config.conv, rng)
    return StackedLstmBackbone(config.lstm, rng)


class EarlyClassifier:
    """
    Классификатор с обучаемой остановкой.

    По каждому префиксу x_{→t} бэкбон дает h_t, из которого голова θ_cl
    оценивает вероятности классов, а голова θ_δ - вероятность остановки δ_t.
    """

    def __init__(self, config: ModelConfig, seed: int = 0):
        self.config = config
        self.seed = seed
        rng = np.random.default_rng(seed)
        self.backbone = build_backbone(config, rng)
        self.classifier = LinearHead.create(config.hidden_dim, config.num_classes, rng, "classifier")
        self.stopping = LinearHead.create(config.hidden_dim, 1, rng, "stopping")

    @property
    def num_classes(self) -> int:
        return self.config.num_classes

    def parameters(self) -> Dict[str, DiffNode]:
        """Все обучаемые параметры в фиксированном порядке."""
        return {**self.backbone.parameters(), **self.classifier.parameters(), **self.stopping.parameters()}

    def classification_parameters(self) -> Dict[str, DiffNode]:
        """Параметры без головы остановки (фаза чистой классификации)."""
        return {**self.backbone.parameters(), **self.classifier.parameters()}

    def buffers(self) -> Dict[str, np.ndarray]:
        return self.backbone.buffers()

    def num_parameters(self) -> int:
        return int(sum(p.values.size for p in self.parameters().values()))

    def load_state(self, parameters: Dict[str, np.ndarray], buffers: Dict[str, np.ndarray]):
        own = self.parameters()
        missing = set(own) - set(parameters)
        if missing:
            raise KeyError(f"В состоянии нет параметров: {sorted(missing)}")
        for name, node in own.items():
            values = np.asarray(parameters[name], dtype=np.float64)
            if values.shape != node.shape:
                raise ValueError(f"Параметр {name}: форма {values.shape} вместо {node.shape}")
            node.values = values.copy()
            node.grad = None
        self.backbone.load_buffers(buffers)

    @staticmethod
    def _as_batch(x) -> Tuple[DiffNode, bool]:
        x = as_node(x)
        if x.ndim == 1:
            x = DiffNode(x.values[:, None])
        if x.ndim == 2:
            return DiffNode(x.values[None]), True
        if x.shape[-2] < 1:
            raise ArgumentError("Пустой ряд")
        return x, False

    def forward(self, x, training: bool = False, rng: Optional[np.random.Generator] = None) -> ModelOutput:
        """
        Прогон по всем префиксам батча.

        Args:
            x: Батч [B, N, D] (одиночный ряд [N, D] или [N] дополняется осью батча)
            training: Режим обучения
            rng: Генератор для dropout

        Returns:
            ModelOutput: hidden [B, N, H], logits [B, N, C], delta [B, N]
        """
        x, _ = self._as_batch(x)
        hidden = self.backbone.all_prefix_hidden(x, training=training, rng=rng)
        return ModelOutput(hidden=hidden, logits=self.classifier(hidden),
                           delta=stop_probability(hidden, self.stopping))

    def infer(self, x) -> Tuple[np.ndarray, np.ndarray]:
        """Вероятности классов [B, N, C] и δ [B, N] в режиме инференса."""
        with no_grad():
            output = self.forward(x, training=False)
            probs = softmax_rows(output.logits)
        return probs.values, output.delta.values
