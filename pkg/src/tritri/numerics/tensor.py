"""Reverse-mode automatic differentiation over float64 numpy arrays.

A graph is recorded implicitly while primitives execute: every tensor an op
produces points at a ``Node`` holding the op name, the input tensors, and a
closure computing input gradients from the output gradient. The execution
order of those nodes is a topological order by construction (a Wengert
list); ``backward`` replays the subgraph below a scalar loss in reverse
topological order exactly once and accumulates ``.grad`` on every
``requires_grad`` leaf.

All arithmetic is float64. Every primitive validates that its output is
finite and raises :class:`NumericError` otherwise, so NaN/Inf never
propagates silently.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from ..errors import NumericError, ShapeError, StateError

_GRAD_ENABLED = True


class no_grad:
    """Context manager that disables graph recording (inference paths)."""

    def __enter__(self):
        global _GRAD_ENABLED
        self._prev = _GRAD_ENABLED
        _GRAD_ENABLED = False
        return self

    def __exit__(self, *exc):
        global _GRAD_ENABLED
        _GRAD_ENABLED = self._prev
        return False


class Node:
    """One recorded op: inputs, op kind, and the local backward rule."""

    __slots__ = ("op", "inputs", "backward_fn")

    def __init__(self, op: str, inputs: tuple["Tensor", ...], backward_fn: Callable):
        self.op = op
        self.inputs = inputs
        self.backward_fn = backward_fn


class Tensor:
    """A float64 array plus optional gradient bookkeeping."""

    __slots__ = ("data", "requires_grad", "grad", "node", "name", "_backward_done")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        arr = np.asarray(data, dtype=np.float64)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self.node: Node | None = None
        self.name = name
        self._backward_done = False

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}{tag}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _check_finite(arr: np.ndarray, op: str):
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"non-finite value produced by op '{op}'")


def _make(op: str, data: np.ndarray, inputs: tuple[Tensor, ...], backward_fn) -> Tensor:
    _check_finite(data, op)
    out = Tensor(data)
    if _GRAD_ENABLED and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        out.node = Node(op, inputs, backward_fn)
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to the original operand shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# ---------------------------------------------------------------------------
# Primitives
# ---------------------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        data = a.data + b.data
    except ValueError:
        raise ShapeError(f"add: shapes {a.shape} and {b.shape} do not broadcast")
    return _make("add", data, (a, b), lambda g: (
        _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        data = a.data * b.data
    except ValueError:
        raise ShapeError(f"mul: shapes {a.shape} and {b.shape} do not broadcast")
    return _make("mul", data, (a, b), lambda g: (
        _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)))


def scale(x, s: float) -> Tensor:
    x = _as_tensor(x)
    s = float(s)
    return _make("scale", x.data * s, (x,), lambda g: (g * s,))


def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.shape[-1] != b.data.shape[-2 if b.data.ndim > 1 else 0]:
        raise ShapeError(f"matmul: inner dimensions differ, {a.shape} @ {b.shape}")
    data = np.matmul(a.data, b.data)

    def backward(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2)) if b.data.ndim > 1 else np.multiply.outer(g, b.data)
        if a.data.ndim > 1:
            gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        else:
            gb = np.multiply.outer(a.data, g)
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return _make("matmul", data, (a, b), backward)


def tanh(x) -> Tensor:
    x = _as_tensor(x)
    data = np.tanh(x.data)
    return _make("tanh", data, (x,), lambda g: (g * (1.0 - data * data),))


def relu(x) -> Tensor:
    x = _as_tensor(x)
    data = np.maximum(x.data, 0.0)
    return _make("relu", data, (x,), lambda g: (g * (x.data > 0.0),))


def softmax(x, axis: int = -1) -> Tensor:
    x = _as_tensor(x)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    data = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        dot = (g * data).sum(axis=axis, keepdims=True)
        return (data * (g - dot),)

    return _make("softmax", data, (x,), backward)


def layer_norm(x, gain, bias, eps: float = 1e-5) -> Tensor:
    """Normalize over the last axis, then apply elementwise gain and bias."""
    x, gain, bias = _as_tensor(x), _as_tensor(gain), _as_tensor(bias)
    d = x.data.shape[-1]
    if gain.data.shape != (d,) or bias.data.shape != (d,):
        raise ShapeError(
            f"layer_norm: gain/bias shapes {gain.shape}/{bias.shape} do not match feature dim {d}")
    mu = x.data.mean(axis=-1, keepdims=True)
    var = x.data.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv
    data = xhat * gain.data + bias.data

    def backward(g):
        dxhat = g * gain.data
        dx = inv * (dxhat - dxhat.mean(axis=-1, keepdims=True)
                    - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True))
        axes = tuple(range(g.ndim - 1))
        return dx, (g * xhat).sum(axis=axes), g.sum(axis=axes)

    return _make("layer_norm", data, (x, gain, bias), backward)


def embedding(table, ids) -> Tensor:
    """Look up rows of ``table`` (vocab x dim) by an integer id array."""
    table = _as_tensor(table)
    ids = np.asarray(ids, dtype=np.int64)
    vocab = table.data.shape[0]
    if ids.size and (ids.min() < 0 or ids.max() >= vocab):
        raise ShapeError(f"embedding: id out of range for table with {vocab} rows")
    data = table.data[ids]

    def backward(g):
        gt = np.zeros_like(table.data)
        np.add.at(gt, ids, g)
        return (gt,)

    return _make("embedding", data, (table,), backward)


def concat(parts: Sequence, axis: int = -1) -> Tensor:
    parts = [_as_tensor(p) for p in parts]
    shapes = [p.data.shape for p in parts]
    base = list(shapes[0])
    ax = axis % len(base)
    for s in shapes[1:]:
        if len(s) != len(base) or any(s[i] != base[i] for i in range(len(base)) if i != ax):
            raise ShapeError(f"concat: incompatible shapes {shapes} along axis {axis}")
    data = np.concatenate([p.data for p in parts], axis=axis)
    sizes = [s[ax] for s in shapes]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        return tuple(
            np.ascontiguousarray(np.take(g, range(offsets[i], offsets[i + 1]), axis=ax))
            for i in range(len(parts)))

    return _make("concat", data, tuple(parts), backward)


def reshape(x, shape) -> Tensor:
    x = _as_tensor(x)
    data = x.data.reshape(shape)
    return _make("reshape", data, (x,), lambda g: (g.reshape(x.data.shape),))


def transpose(x, axes) -> Tensor:
    x = _as_tensor(x)
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    return _make("transpose", x.data.transpose(axes), (x,),
                 lambda g: (g.transpose(inverse),))


def tsum(x) -> Tensor:
    x = _as_tensor(x)
    return _make("sum", np.asarray(x.data.sum()), (x,),
                 lambda g: (np.broadcast_to(g, x.data.shape).copy(),))


def tmean(x) -> Tensor:
    x = _as_tensor(x)
    n = x.data.size
    return _make("mean", np.asarray(x.data.mean()), (x,),
                 lambda g: (np.broadcast_to(g / n, x.data.shape).copy(),))


def dropout(x, p: float, rng) -> Tensor:
    """Inverted dropout; draws one mask from ``rng`` per call."""
    x = _as_tensor(x)
    if not 0.0 <= p < 1.0:
        raise ShapeError(f"dropout: probability {p} outside [0, 1)")
    if p == 0.0:
        return x
    mask = (rng.random(x.data.shape) >= p) / (1.0 - p)
    return mul(x, Tensor(mask))


def cross_entropy(logits, targets, mask=None, label_smoothing: float = 0.0) -> Tensor:
    """Mean label-smoothed cross-entropy over unmasked positions.

    ``logits`` has shape (..., V); ``targets`` are integer ids over the
    leading shape; ``mask`` (same leading shape) selects positions that
    count. With smoothing eps the target distribution is
    ``(1-eps) * onehot + eps/V``.
    """
    logits = _as_tensor(logits)
    targets = np.asarray(targets, dtype=np.int64)
    if logits.data.shape[:-1] != targets.shape:
        raise ShapeError(
            f"cross_entropy: logits {logits.shape} do not align with targets {targets.shape}")
    vocab = logits.data.shape[-1]
    if mask is None:
        mask = np.ones(targets.shape)
    mask = np.asarray(mask, dtype=np.float64)
    n = mask.sum()
    if n == 0:
        raise ShapeError("cross_entropy: every position is masked out")
    eps = float(label_smoothing)

    m = logits.data.max(axis=-1, keepdims=True)
    lse = m + np.log(np.exp(logits.data - m).sum(axis=-1, keepdims=True))
    logp = logits.data - lse
    nll = -np.take_along_axis(logp, targets[..., None], axis=-1)[..., 0]
    smooth = -logp.mean(axis=-1)
    per_pos = (1.0 - eps) * nll + eps * smooth
    data = np.asarray((per_pos * mask).sum() / n)

    def backward(g):
        p = np.exp(logp)
        q = np.full_like(p, eps / vocab)
        np.put_along_axis(
            q, targets[..., None],
            np.take_along_axis(q, targets[..., None], axis=-1) + (1.0 - eps),
            axis=-1)
        return ((p - q) * mask[..., None] * (g / n),)

    return _make("cross_entropy", data, (logits,), backward)


# ---------------------------------------------------------------------------
# Backward pass
# ---------------------------------------------------------------------------

def topo_order(root: Tensor) -> list[Tensor]:
    """Tensors below ``root`` in topological order (inputs before outputs)."""
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        t, expanded = stack.pop()
        if expanded:
            order.append(t)
            continue
        if id(t) in seen:
            continue
        seen.add(id(t))
        stack.append((t, True))
        if t.node is not None:
            for parent in t.node.inputs:
                if id(parent) not in seen:
                    stack.append((parent, False))
    return order


def backward(loss: Tensor) -> None:
    """Accumulate ``.grad`` on every requires_grad leaf below ``loss``."""
    if loss.data.ndim != 0:
        raise ShapeError(f"backward: loss must be scalar, got shape {loss.shape}")
    if loss._backward_done:
        raise StateError("backward already ran for this loss; re-run forward first")
    loss._backward_done = True

    grads: dict[int, np.ndarray] = {id(loss): np.asarray(1.0)}
    for t in reversed(topo_order(loss)):
        g = grads.pop(id(t), None)
        if g is None:
            continue
        if t.node is None:
            if t.requires_grad:
                t.grad = g if t.grad is None else t.grad + g
            continue
        input_grads = t.node.backward_fn(g)
        for parent, pg in zip(t.node.inputs, input_grads):
            if pg is None or not parent.requires_grad:
                continue
            if id(parent) in grads:
                grads[id(parent)] = grads[id(parent)] + pg
            else:
                grads[id(parent)] = pg
