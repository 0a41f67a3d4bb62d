"""Deterministic float64 tensor arithmetic with reverse-mode autodiff."""

from .gradcheck import check_gradients
from .rng import Rng
from .tensor import (
    Node,
    Tensor,
    add,
    backward,
    concat,
    cross_entropy,
    dropout,
    embedding,
    layer_norm,
    matmul,
    mul,
    no_grad,
    relu,
    reshape,
    scale,
    softmax,
    tanh,
    tmean,
    topo_order,
    transpose,
    tsum,
)

__all__ = [
    "Node", "Rng", "Tensor", "add", "backward", "check_gradients", "concat",
    "cross_entropy", "dropout", "embedding", "layer_norm", "matmul", "mul",
    "no_grad", "relu", "reshape", "scale", "softmax", "tanh", "tmean",
    "topo_order", "transpose", "tsum",
]
