"""Многослойная LSTM с инкрементальным проходом по времени."""
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from ndtensor import (ArgumentError, DiffNode, DimensionError, add, as_node, concat, linear, mul, parameter,
                      sigmoid, stack, tanh)

from .configs import LstmConfig


@dataclass
class LstmState:
    """Состояние (h^l_t, c^l_t) каждого слоя."""
    hidden: List[DiffNode]
    cell: List[DiffNode]

    @property
    def num_layers(self) -> int:
        return len(self.hidden)


class StackedLstmBackbone:
    """
    Стек LSTM-слоев: первый слой получает x_t, слой l - выход h^{l-1}_t.

    Гейты упакованы в порядке i, f, g, o; смещение гейта забывания
    инициализируется единицей, остальные веса - равномерно в ±1/√fan_in.
    """

    def __init__(self, config: LstmConfig, rng: np.random.Generator):
        self.config = config
        self.weights: List[DiffNode] = []
        self.biases: List[DiffNode] = []
        size = config.hidden_dim
        for layer in range(1, config.num_layers + 1):
            fan_in = (config.input_dim if layer == 1 else size) + size
            bound = 1.0 / np.sqrt(fan_in)
            bias = rng.uniform(-bound, bound, 4 * size)
            bias[size:2 * size] = 1.0
            self.weights.append(parameter(rng.uniform(-bound, bound, (fan_in, 4 * size)),
                                          name=f"lstm.layer{layer}.weight"))
            self.biases.append(parameter(bias, name=f"lstm.layer{layer}.bias"))

    @property
    def hidden_dim(self) -> int:
        return self.config.hidden_dim

    def parameters(self) -> Dict[str, DiffNode]:
        params = {}
        for weight, bias in zip(self.weights, self.biases):
            params[weight.name] = weight
            params[bias.name] = bias
        return params

    def buffers(self) -> Dict[str, np.ndarray]:
        return {}

    def load_buffers(self, buffers: Dict[str, np.ndarray]):
        pass

    def initial_state(self, batch_shape: Tuple[int, ...] = ()) -> LstmState:
        zeros = np.zeros(batch_shape + (self.hidden_dim,))
        layers = self.config.num_layers
        return LstmState(hidden=[DiffNode(zeros) for _ in range(layers)],
                         cell=[DiffNode(zeros) for _ in range(layers)])

    def lstm_step(self, x_t, state: LstmState) -> Tuple[DiffNode, LstmState]:
        """
        Один шаг по времени через все слои.

        Args:
            x_t: Наблюдение [D] или батч [B, D]
            state: Состояние после шага t-1

        Returns:
            Tuple[DiffNode, LstmState]: Выход верхнего слоя h_t и новое состояние
        """
        x_t = as_node(x_t)
        if x_t.shape[-1] != self.config.input_dim:
            raise DimensionError(
                f"lstm_step: вход {x_t.dims} не согласован с input_dim={self.config.input_dim}")
        if state.num_layers != self.config.num_layers:
            raise DimensionError(
                f"lstm_step: состояние на {state.num_layers} слоев, модель на {self.config.num_layers}")
        size = self.hidden_dim
        layer_input = x_t
        hidden, cell = [], []
        for weight, bias, h_prev, c_prev in zip(self.weights, self.biases, state.hidden, state.cell):
            gates = linear(concat([layer_input, h_prev], axis=-1), weight, bias)
            input_gate = sigmoid(gates[..., 0:size])
            forget_gate = sigmoid(gates[..., size:2 * size])
            candidate = tanh(gates[..., 2 * size:3 * size])
            output_gate = sigmoid(gates[..., 3 * size:4 * size])
            c_t = add(mul(forget_gate, c_prev), mul(input_gate, candidate))
            h_t = mul(output_gate, tanh(c_t))
            hidden.append(h_t)
            cell.append(c_t)
            layer_input = h_t
        return layer_input, LstmState(hidden=hidden, cell=cell)

    def hidden_at(self, x, t: int) -> DiffNode:
        """h_t полной раскруткой шагов 0..t."""
        x = as_node(x)
        length = x.shape[-2]
        if not 0 <= t < length:
            raise IndexError(f"hidden_at: индекс {t} вне диапазона [0, {length - 1}]")
        state = self.initial_state(x.shape[:-2])
        h_t = None
        for step in range(t + 1):
            h_t, state = self.lstm_step(x[..., step, :], state)
        return h_t

    def all_prefix_hidden(self, x, training: bool = False,
                          rng: Optional[np.random.Generator] = None) -> DiffNode:
        """Один проход слева направо, h_0..h_{N-1} формы [..., N, r]."""
        x = as_node(x)
        if x.shape[-2] < 1:
            raise ArgumentError("all_prefix_hidden: пустой ряд")
        state = self.initial_state(x.shape[:-2])
        outputs = []
        for step in range(x.shape[-2]):
            h_t, state = self.lstm_step(x[..., step, :], state)
            outputs.append(h_t)
        return stack(outputs, axis=-2)
