"""Узел вычислительного графа, базовая арифметика и обратный проход."""
from __future__ import annotations

import threading
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from .errors import DimensionError, GraphContractError

MAX_AXES = 3

_grad_state = threading.local()

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]
ArrayLike = Union["DiffNode", np.ndarray, Sequence, float, int]


def is_grad_enabled() -> bool:
    """Включена ли запись графа в текущем потоке."""
    return getattr(_grad_state, "enabled", True)


@contextmanager
def no_grad():
    """Контекст без записи графа: операции возвращают узлы-константы."""
    previous = is_grad_enabled()
    _grad_state.enabled = False
    try:
        yield
    finally:
        _grad_state.enabled = previous


@dataclass(frozen=True)
class Shape:
    """Форма массива: от 1 до 3 положительных осей (пустая форма у скаляра-корня)."""
    dims: Tuple[int, ...]

    def __post_init__(self):
        if len(self.dims) > MAX_AXES:
            raise DimensionError(f"Допускается не более {MAX_AXES} осей, получено {self.dims}")
        if any(d < 1 for d in self.dims):
            raise DimensionError(f"Оси должны быть положительными: {self.dims}")

    @classmethod
    def of(cls, values: np.ndarray) -> "Shape":
        return cls(tuple(int(d) for d in values.shape))

    @property
    def size(self) -> int:
        return int(np.prod(self.dims)) if self.dims else 1

    def __str__(self) -> str:
        return "[" + "×".join(str(d) for d in self.dims) + "]"


@dataclass
class OpRecord:
    """Запись об операции, породившей узел."""
    name: str
    parents: Tuple["DiffNode", ...]
    backward: BackwardFn


class DiffNode:
    """Массив float64, участвующий в записанном графе вычислений."""

    __slots__ = ("values", "grad", "requires_grad", "name", "_op", "_consumed")

    def __init__(self, values: ArrayLike, requires_grad: bool = False,
                 name: Optional[str] = None, _op: Optional[OpRecord] = None):
        if isinstance(values, DiffNode):
            values = values.values
        array = np.asarray(values, dtype=np.float64)
        if array.ndim > MAX_AXES:
            raise DimensionError(f"Узел поддерживает до {MAX_AXES} осей, получено {array.shape}")
        self.values = array
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = bool(requires_grad)
        self.name = name
        self._op = _op
        self._consumed = False

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.values.shape

    @property
    def ndim(self) -> int:
        return self.values.ndim

    @property
    def dims(self) -> Shape:
        return Shape.of(self.values)

    @property
    def is_leaf(self) -> bool:
        return self._op is None

    @property
    def op_name(self) -> Optional[str]:
        return self._op.name if self._op is not None else None

    def item(self) -> float:
        return float(self.values.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.values

    def zero_grad(self):
        self.grad = None

    def accumulate(self, gradient: np.ndarray):
        if not self.requires_grad:
            return
        if self.grad is None:
            self.grad = np.array(gradient, dtype=np.float64, copy=True)
        else:
            self.grad += gradient

    def backward(self):
        backward(self)

    def __repr__(self) -> str:
        label = f" '{self.name}'" if self.name else ""
        return f"DiffNode{label}(shape={self.dims}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return neg(self)

    def __getitem__(self, key):
        return getitem(self, key)


def as_node(value: ArrayLike) -> DiffNode:
    """Оборачивает массив в узел-константу (узлы возвращаются как есть)."""
    return value if isinstance(value, DiffNode) else DiffNode(value)


def parameter(values: ArrayLike, name: Optional[str] = None) -> DiffNode:
    """Обучаемый лист графа."""
    return DiffNode(np.array(values, dtype=np.float64, copy=True), requires_grad=True, name=name)


def make_node(values: np.ndarray, parents: Iterable[DiffNode], backward_fn: BackwardFn,
              name: str) -> DiffNode:
    """Создает узел-результат и записывает операцию, если это нужно для градиента."""
    parents = tuple(parents)
    requires = is_grad_enabled() and any(p.requires_grad for p in parents)
    op = OpRecord(name, parents, backward_fn) if requires else None
    return DiffNode(values, requires_grad=requires, _op=op)


def zero_grad(nodes: Iterable[DiffNode]):
    """Сбрасывает накопленные градиенты листьев."""
    for node in nodes:
        node.grad = None


def _topological_order(root: DiffNode) -> List[DiffNode]:
    # Итеративный обход: глубина графа LSTM превышает лимит рекурсии.
    order: List[DiffNode] = []
    visited = set()
    stack: List[Tuple[DiffNode, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        if node._op is not None:
            for parent in node._op.parents:
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
    return order


def backward(root: DiffNode):
    """
    Обратный проход от скалярного корня.

    После вызова каждый достижимый лист с requires_grad содержит dRoot/dLeaf
    (с накоплением). Записи операций промежуточных узлов освобождаются.

    Args:
        root: Скалярный узел (размер 1)

    Raises:
        GraphContractError: Нескалярный корень или повторный вызов
    """
    if root.values.size != 1:
        raise GraphContractError(f"backward требует скалярный корень, получено {root.dims}")
    if root._consumed:
        raise GraphContractError("Повторный backward для того же корня: граф уже освобожден")
    root._consumed = True
    if not root.requires_grad:
        logger.debug("backward: корень не зависит от обучаемых параметров")
        return

    pending: Dict[int, np.ndarray] = {id(root): np.ones_like(root.values)}
    for node in reversed(_topological_order(root)):
        gradient = pending.pop(id(node), None)
        if gradient is None:
            continue
        if node._op is None:
            node.accumulate(gradient)
            continue
        record = node._op
        parent_grads = record.backward(gradient)
        for parent, parent_grad in zip(record.parents, parent_grads):
            if parent_grad is None or not parent.requires_grad:
                continue
            if parent_grad.shape != parent.shape:
                raise GraphContractError(
                    f"Операция '{record.name}' вернула градиент {parent_grad.shape} "
                    f"для входа {parent.shape}")
            key = id(parent)
            if key in pending:
                pending[key] = pending[key] + parent_grad
            else:
                pending[key] = parent_grad
        node._op = None


def unbroadcast(gradient: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Суммирует градиент по осям, размноженным при broadcasting."""
    if gradient.shape == shape:
        return gradient
    while gradient.ndim > len(shape):
        gradient = gradient.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and gradient.shape[axis] != 1:
            gradient = gradient.sum(axis=axis, keepdims=True)
    return gradient


def _broadcast_shape(a: DiffNode, b: DiffNode) -> Tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DimensionError(f"Формы несовместимы: {a.dims} и {b.dims}") from None


def add(a: ArrayLike, b: ArrayLike) -> DiffNode:
    a, b = as_node(a), as_node(b)
    _broadcast_shape(a, b)

    def _backward(g):
        return unbroadcast(g, a.shape), unbroadcast(g, b.shape)

    return make_node(a.values + b.values, (a, b), _backward, "add")


def sub(a: ArrayLike, b: ArrayLike) -> DiffNode:
    a, b = as_node(a), as_node(b)
    _broadcast_shape(a, b)

    def _backward(g):
        return unbroadcast(g, a.shape), unbroadcast(-g, b.shape)

    return make_node(a.values - b.values, (a, b), _backward, "sub")


def mul(a: ArrayLike, b: ArrayLike) -> DiffNode:
    a, b = as_node(a), as_node(b)
    _broadcast_shape(a, b)

    def _backward(g):
        return unbroadcast(g * b.values, a.shape), unbroadcast(g * a.values, b.shape)

    return make_node(a.values * b.values, (a, b), _backward, "mul")


def neg(a: ArrayLike) -> DiffNode:
    a = as_node(a)
    return make_node(-a.values, (a,), lambda g: (-g,), "neg")


def sum_all(a: ArrayLike) -> DiffNode:
    a = as_node(a)
    return make_node(np.array(a.values.sum()), (a,),
                     lambda g: (np.full(a.shape, float(g)),), "sum_all")


def mean_all(a: ArrayLike) -> DiffNode:
    a = as_node(a)
    count = a.values.size
    return make_node(np.array(a.values.mean()), (a,),
                     lambda g: (np.full(a.shape, float(g) / count),), "mean_all")


def sum_axis(a: ArrayLike, axis: int = -1, keepdims: bool = False) -> DiffNode:
    """Сумма вдоль одной оси."""
    a = as_node(a)

    def _backward(g):
        grad = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(grad, a.shape).copy(),)

    return make_node(a.values.sum(axis=axis, keepdims=keepdims), (a,), _backward, "sum_axis")


def reshape(a: ArrayLike, shape: Tuple[int, ...]) -> DiffNode:
    a = as_node(a)
    try:
        values = a.values.reshape(shape)
    except ValueError:
        raise DimensionError(f"Нельзя привести {a.dims} к форме {shape}") from None
    return make_node(values, (a,), lambda g: (g.reshape(a.shape),), "reshape")


def getitem(a: ArrayLike, key) -> DiffNode:
    """Базовая индексация (срезы, целые, Ellipsis)."""
    a = as_node(a)

    def _backward(g):
        grad = np.zeros(a.shape)
        grad[key] = g
        return (grad,)

    return make_node(np.array(a.values[key]), (a,), _backward, "getitem")
