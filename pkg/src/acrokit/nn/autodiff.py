"""Minimal dense-tensor engine with reverse-mode gradients.

Everything is float64 on the CPU. Tensors built from operations record their
parents and a backward closure; backward() on a scalar loss runs the tape in
reverse topological order. Only the layers the two models need are provided.
"""

from __future__ import annotations

import numpy as np


class ShapeError(ValueError):
    """Operand shapes are incompatible for the requested operation."""


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward_fn")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward_fn = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # operator sugar
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
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return getitem(self, idx)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 else shape[0])

    def item(self) -> float:
        return float(self.data)

    def backward(self) -> None:
        backward(self)


class Parameter(Tensor):
    """Trainable tensor with gradient slot and Adam moment state."""

    __slots__ = ("name", "m", "v", "step")

    def __init__(self, data, name: str = ""):
        super().__init__(data, requires_grad=True)
        self.name = name
        self.m = np.zeros_like(self.data)
        self.v = np.zeros_like(self.data)
        self.step = 0


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def constant(x) -> Tensor:
    return Tensor(x)


def _make(data: np.ndarray, parents: tuple[Tensor, ...], backward_fn) -> Tensor:
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward_fn = backward_fn
    return out


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def backward(loss: Tensor) -> None:
    """Populate .grad over the graph below a scalar loss."""
    if loss.data.size != 1:
        raise ShapeError(f"backward needs a scalar, got shape {loss.data.shape}")
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    loss.grad = np.ones_like(loss.data)
    for node in reversed(order):
        if node._backward_fn is not None and node.grad is not None:
            node._backward_fn(node.grad)


def zero_grads(params) -> None:
    for p in params:
        p.grad = None


# ---------------------------------------------------------------------------
# elementwise / broadcasting ops


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data + b.data

    def back(g):
        _accumulate(a, _unbroadcast(g, a.data.shape))
        _accumulate(b, _unbroadcast(g, b.data.shape))

    return _make(data, (a, b), back)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data - b.data

    def back(g):
        _accumulate(a, _unbroadcast(g, a.data.shape))
        _accumulate(b, _unbroadcast(-g, b.data.shape))

    return _make(data, (a, b), back)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data * b.data

    def back(g):
        _accumulate(a, _unbroadcast(g * b.data, a.data.shape))
        _accumulate(b, _unbroadcast(g * a.data, b.data.shape))

    return _make(data, (a, b), back)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data
    if ad.ndim not in (1, 2) or bd.ndim not in (1, 2):
        raise ShapeError(f"matmul supports 1D/2D operands, got {ad.shape} @ {bd.shape}")
    if ad.shape[-1] != (bd.shape[0] if bd.ndim >= 1 else None):
        raise ShapeError(f"matmul inner dimensions differ: {ad.shape} @ {bd.shape}")
    data = ad @ bd

    def back(g):
        if ad.ndim == 2 and bd.ndim == 2:
            _accumulate(a, g @ bd.T)
            _accumulate(b, ad.T @ g)
        elif ad.ndim == 1 and bd.ndim == 2:
            _accumulate(a, bd @ g)
            _accumulate(b, np.outer(ad, g))
        elif ad.ndim == 2 and bd.ndim == 1:
            _accumulate(a, np.outer(g, bd))
            _accumulate(b, ad.T @ g)
        else:  # 1D @ 1D
            _accumulate(a, g * bd)
            _accumulate(b, g * ad)

    return _make(data, (a, b), back)


def getitem(a: Tensor, idx) -> Tensor:
    data = np.asarray(a.data[idx])

    def back(g):
        if not a.requires_grad:
            return
        full = np.zeros_like(a.data)
        np.add.at(full, idx, g)
        _accumulate(a, full)

    return _make(data, (a,), back)


def reshape(a: Tensor, shape) -> Tensor:
    old_shape = a.data.shape
    data = a.data.reshape(shape)

    def back(g):
        _accumulate(a, g.reshape(old_shape))

    return _make(data, (a,), back)


def concat(tensors: list[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    try:
        data = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        raise ShapeError(
            f"cannot concatenate shapes {[t.data.shape for t in tensors]} "
            f"along axis {axis}"
        ) from None
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def back(g):
        for t, lo, hi in zip(tensors, offsets, offsets[1:]):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(lo, hi)
            _accumulate(t, g[tuple(sl)])

    return _make(data, tuple(tensors), back)


def stack_rows(tensors: list[Tensor]) -> Tensor:
    """Stack 1D vectors into a (n, d) matrix."""
    tensors = [as_tensor(t) for t in tensors]
    data = np.stack([t.data for t in tensors], axis=0)

    def back(g):
        for i, t in enumerate(tensors):
            _accumulate(t, g[i])

    return _make(data, tuple(tensors), back)


def tanh(a: Tensor) -> Tensor:
    a = as_tensor(a)
    data = np.tanh(a.data)

    def back(g):
        _accumulate(a, g * (1.0 - data * data))

    return _make(data, (a,), back)


def sigmoid(a: Tensor) -> Tensor:
    a = as_tensor(a)
    x = a.data
    data = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                    np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))

    def back(g):
        _accumulate(a, g * data * (1.0 - data))

    return _make(data, (a,), back)


def relu(a: Tensor) -> Tensor:
    a = as_tensor(a)
    data = np.maximum(a.data, 0.0)

    def back(g):
        _accumulate(a, g * (a.data > 0))

    return _make(data, (a,), back)


def exp(a: Tensor) -> Tensor:
    a = as_tensor(a)
    data = np.exp(a.data)

    def back(g):
        _accumulate(a, g * data)

    return _make(data, (a,), back)


def log(a: Tensor) -> Tensor:
    a = as_tensor(a)
    data = np.log(a.data)

    def back(g):
        _accumulate(a, g / a.data)

    return _make(data, (a,), back)


# ---------------------------------------------------------------------------
# reductions


def tensor_sum(a: Tensor, axis: int | None = None) -> Tensor:
    a = as_tensor(a)
    data = a.data.sum(axis=axis)

    def back(g):
        if axis is None:
            _accumulate(a, np.broadcast_to(g, a.data.shape).copy())
        else:
            _accumulate(a, np.broadcast_to(np.expand_dims(g, axis), a.data.shape).copy())

    return _make(np.asarray(data), (a,), back)


def mean(a: Tensor) -> Tensor:
    a = as_tensor(a)
    return mul(tensor_sum(a), 1.0 / a.data.size)


def max_pool_time(a: Tensor) -> Tensor:
    """Componentwise max over the time axis of a (n, d) sequence."""
    a = as_tensor(a)
    if a.data.ndim != 2 or a.data.shape[0] == 0:
        raise ShapeError(f"max_pool_time needs a non-empty (n, d) input, got {a.data.shape}")
    data = a.data.max(axis=0)
    argmax = a.data.argmax(axis=0)  # ties: first row wins

    def back(g):
        full = np.zeros_like(a.data)
        full[argmax, np.arange(a.data.shape[1])] = g
        _accumulate(a, full)

    return _make(data, (a,), back)


def logsumexp(a: Tensor, axis: int | None = None) -> Tensor:
    a = as_tensor(a)
    m = a.data.max(axis=axis, keepdims=True)
    shifted = np.exp(a.data - m)
    total = shifted.sum(axis=axis, keepdims=True)
    out_keep = m + np.log(total)
    data = out_keep if axis is None else np.squeeze(out_keep, axis=axis)
    if axis is None:
        data = np.asarray(data.reshape(()))

    def back(g):
        soft = shifted / total
        if axis is None:
            _accumulate(a, g * soft)
        else:
            _accumulate(a, np.expand_dims(g, axis) * soft)

    return _make(data, (a,), back)


def log_softmax(a: Tensor) -> Tensor:
    """Log-probabilities of a 1D logit vector."""
    a = as_tensor(a)
    if a.data.ndim != 1:
        raise ShapeError(f"log_softmax expects a 1D vector, got {a.data.shape}")
    return sub(a, logsumexp(a))


def nll_loss(logits: Tensor, gold_index: int) -> Tensor:
    """Negative log-likelihood of the gold class under softmax(logits)."""
    return mul(getitem(log_softmax(logits), gold_index), -1.0)


def dropout(a: Tensor, rate: float, rng: np.random.Generator | None,
            training: bool) -> Tensor:
    """Inverted dropout; identity when rate is 0 or not training."""
    if not training or rate == 0.0:
        return a
    if not 0.0 <= rate < 1.0:
        raise ShapeError(f"dropout rate must be in [0, 1), got {rate}")
    mask = (rng.random(a.data.shape) >= rate) / (1.0 - rate)
    return mul(a, constant(mask))
