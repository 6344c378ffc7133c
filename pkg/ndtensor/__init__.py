"""Минимальный движок обратного автоматического дифференцирования на numpy."""
from .errors import ArgumentError, DegenerateBatchError, DimensionError, GraphContractError, NumericError
from .gradcheck import check_gradients
from .layers import BatchNormState, batch_norm, dropout
from .node import (DiffNode, Shape, add, as_node, backward, getitem, is_grad_enabled, mean_all, mul, neg,
                   no_grad, parameter, reshape, sub, sum_all, sum_axis, zero_grad)
from .ops import (clip, concat, concat_features, conv1d_causal, cumprod, linear, log_softmax, pick,
                  prefix_max_all, prefix_max_pool, sigmoid, softmax_rows, stack, tanh)

__all__ = [
    "ArgumentError", "DegenerateBatchError", "DimensionError", "GraphContractError", "NumericError",
    "check_gradients", "BatchNormState", "batch_norm", "dropout",
    "DiffNode", "Shape", "add", "as_node", "backward", "getitem", "is_grad_enabled", "mean_all", "mul",
    "neg", "no_grad", "parameter", "reshape", "sub", "sum_all", "sum_axis", "zero_grad",
    "clip", "concat", "concat_features", "conv1d_causal", "cumprod", "linear", "log_softmax", "pick",
    "prefix_max_all", "prefix_max_pool", "sigmoid", "softmax_rows", "stack", "tanh",
]
