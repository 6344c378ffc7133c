"""Операции нейросетевых слоев с аналитическим обратным проходом."""
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ArgumentError, DimensionError
from .node import ArrayLike, DiffNode, as_node, make_node


def linear(x: ArrayLike, weight: DiffNode, bias: DiffNode) -> DiffNode:
    """
    Аффинное отображение по последней оси: x @ weight + bias.

    Args:
        x: Вход [..., D_in]
        weight: Матрица [D_in, D_out]
        bias: Смещение [D_out]

    Returns:
        DiffNode: Выход [..., D_out]
    """
    x = as_node(x)
    if weight.ndim != 2 or x.shape[-1] != weight.shape[0]:
        raise DimensionError(f"linear: вход {x.dims} не согласован с весами {weight.dims}")
    if bias.shape != (weight.shape[1],):
        raise DimensionError(f"linear: смещение {bias.dims} не согласовано с весами {weight.dims}")
    d_in, d_out = weight.shape

    def _backward(g):
        rows = x.values.reshape(-1, d_in)
        g_rows = g.reshape(-1, d_out)
        return g @ weight.values.T, rows.T @ g_rows, g_rows.sum(axis=0)

    return make_node(x.values @ weight.values + bias.values, (x, weight, bias), _backward, "linear")


def conv1d_causal(x: ArrayLike, kernel: DiffNode, bias: DiffNode) -> DiffNode:
    """
    Причинная одномерная свертка: выход в момент t зависит только от x_0..x_t.

    Вход дополняется слева W-1 нулевыми кадрами, так что правый край ядра
    совпадает с моментом наблюдения.

    Args:
        x: Ряд [N, D_in] или батч [B, N, D_in]
        kernel: Ядра [W, D_in, D_out]
        bias: Смещение [D_out]

    Returns:
        DiffNode: Карта признаков [N, D_out] или [B, N, D_out]
    """
    x = as_node(x)
    if kernel.ndim != 3 or kernel.shape[0] < 1:
        raise DimensionError(f"conv1d_causal: ядро должно иметь форму [W×D_in×D_out], получено {kernel.dims}")
    width, d_in, d_out = kernel.shape
    if x.ndim not in (2, 3) or x.shape[-1] != d_in:
        raise DimensionError(f"conv1d_causal: вход {x.dims} не согласован с ядром {kernel.dims}")
    if bias.shape != (d_out,):
        raise DimensionError(f"conv1d_causal: смещение {bias.dims} не согласовано с ядром {kernel.dims}")

    single = x.ndim == 2
    batch = x.values[None] if single else x.values
    n_batch, length, _ = batch.shape
    padded = np.concatenate([np.zeros((n_batch, width - 1, d_in)), batch], axis=1)
    # окна [B, N, D_in, W] -> строки [B*N, D_in*W]
    windows = sliding_window_view(padded, width, axis=1).reshape(n_batch * length, d_in * width)
    kernel_matrix = kernel.values.transpose(1, 0, 2).reshape(d_in * width, d_out)
    out = (windows @ kernel_matrix).reshape(n_batch, length, d_out) + bias.values

    def _backward(g):
        g3 = g[None] if single else g
        g_rows = g3.reshape(n_batch * length, d_out)
        grad_kernel = (windows.T @ g_rows).reshape(d_in, width, d_out).transpose(1, 0, 2)
        grad_padded = np.zeros_like(padded)
        for offset in range(width):
            grad_padded[:, offset:offset + length, :] += g3 @ kernel.values[offset].T
        grad_x = grad_padded[:, width - 1:, :]
        return (grad_x[0] if single else grad_x), grad_kernel, g_rows.sum(axis=0)

    return make_node(out[0] if single else out, (x, kernel, bias), _backward, "conv1d_causal")


def prefix_max_pool(f: ArrayLike, t: int) -> DiffNode:
    """
    Максимум по префиксу f[0..t] для каждого признака.

    Градиент уходит в позицию первого максимума.

    Args:
        f: Карта признаков [N, D] или [B, N, D]
        t: Индекс последнего наблюденного кадра

    Returns:
        DiffNode: [D] или [B, D]
    """
    f = as_node(f)
    if f.ndim not in (2, 3):
        raise DimensionError(f"prefix_max_pool: ожидается [N×D] или [B×N×D], получено {f.dims}")
    length = f.shape[-2]
    if not 0 <= t < length:
        raise IndexError(f"prefix_max_pool: индекс {t} вне диапазона [0, {length - 1}]")
    prefix = f.values[..., :t + 1, :]
    argmax = prefix.argmax(axis=-2)

    def _backward(g):
        grad = np.zeros(f.shape)
        np.put_along_axis(grad, np.expand_dims(argmax, -2), np.expand_dims(g, -2), axis=-2)
        return (grad,)

    return make_node(prefix.max(axis=-2), (f,), _backward, "prefix_max_pool")


def prefix_max_all(f: ArrayLike) -> DiffNode:
    """
    Бегущий максимум вдоль оси времени: выход[t] = prefix_max_pool(f, t).

    Args:
        f: Карта признаков [N, D] или [B, N, D]

    Returns:
        DiffNode: Той же формы, что и вход
    """
    f = as_node(f)
    if f.ndim not in (2, 3):
        raise DimensionError(f"prefix_max_all: ожидается [N×D] или [B×N×D], получено {f.dims}")
    values = f.values
    running = np.maximum.accumulate(values, axis=-2)
    previous = np.concatenate(
        [np.full(values[..., :1, :].shape, -np.inf), running[..., :-1, :]], axis=-2)
    steps = np.arange(values.shape[-2]).reshape(-1, 1)
    # индекс обновляется только при строгом росте: первое вхождение при равенстве
    argmax = np.maximum.accumulate(np.where(values > previous, steps, 0), axis=-2)

    def _backward(g):
        grad = np.zeros(f.shape)
        index = list(np.indices(f.shape))
        index[-2] = argmax
        np.add.at(grad, tuple(index), g)
        return (grad,)

    return make_node(running, (f,), _backward, "prefix_max_all")


def _stable_sigmoid(values: np.ndarray) -> np.ndarray:
    decay = np.exp(-np.abs(values))
    return np.where(values >= 0, 1.0 / (1.0 + decay), decay / (1.0 + decay))


def sigmoid(x: ArrayLike) -> DiffNode:
    x = as_node(x)
    out = _stable_sigmoid(x.values)
    return make_node(out, (x,), lambda g: (g * out * (1.0 - out),), "sigmoid")


def tanh(x: ArrayLike) -> DiffNode:
    x = as_node(x)
    out = np.tanh(x.values)
    return make_node(out, (x,), lambda g: (g * (1.0 - out * out),), "tanh")


def softmax_rows(x: ArrayLike) -> DiffNode:
    """Softmax по последней оси с вычитанием максимума строки."""
    x = as_node(x)
    shifted = x.values - x.values.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    out = exp / exp.sum(axis=-1, keepdims=True)

    def _backward(g):
        return (out * (g - (g * out).sum(axis=-1, keepdims=True)),)

    return make_node(out, (x,), _backward, "softmax_rows")


def log_softmax(x: ArrayLike) -> DiffNode:
    """Логарифм softmax через log-sum-exp."""
    x = as_node(x)
    shifted = x.values - x.values.max(axis=-1, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    probs = np.exp(out)

    def _backward(g):
        return (g - probs * g.sum(axis=-1, keepdims=True),)

    return make_node(out, (x,), _backward, "log_softmax")


def pick(x: ArrayLike, index: np.ndarray) -> DiffNode:
    """
    Выбор элемента по индексу класса вдоль последней оси.

    Args:
        x: Массив [..., C]
        index: Целочисленные индексы формы x.shape[:-1]
    """
    x = as_node(x)
    index = np.asarray(index, dtype=np.int64)
    if index.shape != x.shape[:-1]:
        raise DimensionError(f"pick: индексы {index.shape} не согласованы с {x.dims}")
    num_classes = x.shape[-1]
    if index.size and (index.min() < 0 or index.max() >= num_classes):
        raise IndexError(f"pick: индекс класса вне диапазона [0, {num_classes - 1}]")
    expanded = index[..., None]

    def _backward(g):
        grad = np.zeros(x.shape)
        np.put_along_axis(grad, expanded, g[..., None], axis=-1)
        return (grad,)

    return make_node(np.take_along_axis(x.values, expanded, axis=-1)[..., 0], (x,), _backward, "pick")


def concat(parts: Sequence[ArrayLike], axis: int = -1) -> DiffNode:
    """Конкатенация вдоль оси с сохранением порядка."""
    if not parts:
        raise ArgumentError("concat: пустой список частей")
    nodes = [as_node(p) for p in parts]
    try:
        out = np.concatenate([n.values for n in nodes], axis=axis)
    except ValueError:
        shapes = ", ".join(str(n.dims) for n in nodes)
        raise DimensionError(f"concat: несовместимые формы {shapes}") from None
    bounds = np.cumsum([n.shape[axis] for n in nodes])[:-1]

    def _backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return make_node(out, nodes, _backward, "concat")


def concat_features(parts: Sequence[ArrayLike]) -> DiffNode:
    """Склейка векторов признаков [D_i] в один [ΣD_i]."""
    return concat(parts, axis=-1)


def stack(parts: Sequence[ArrayLike], axis: int = 0) -> DiffNode:
    if not parts:
        raise ArgumentError("stack: пустой список частей")
    nodes = [as_node(p) for p in parts]
    try:
        out = np.stack([n.values for n in nodes], axis=axis)
    except ValueError:
        raise DimensionError(f"stack: формы частей различаются ({nodes[0].dims}, ...)") from None

    def _backward(g):
        return tuple(np.take(g, i, axis=axis) for i in range(len(nodes)))

    return make_node(out, nodes, _backward, "stack")


def clip(x: ArrayLike, low: float, high: float) -> DiffNode:
    """Ограничение значений; градиент проходит только внутри [low, high]."""
    x = as_node(x)
    inside = (x.values >= low) & (x.values <= high)
    return make_node(np.clip(x.values, low, high), (x,), lambda g: (g * inside,), "clip")


def cumprod(x: ArrayLike, axis: int = -1) -> DiffNode:
    """Кумулятивное произведение; вход не должен содержать нулей."""
    x = as_node(x)
    out = np.cumprod(x.values, axis=axis)

    def _backward(g):
        weighted = np.flip(np.cumsum(np.flip(g * out, axis=axis), axis=axis), axis=axis)
        return (weighted / x.values,)

    return make_node(out, (x,), _backward, "cumprod")
