"""Minimal reverse-mode differentiation over dense float64 arrays.

Each op returns a :class:`Tensor` that remembers its parents and a closure
mapping the output gradient to parent gradients. :func:`gradients` walks the
graph backwards from a scalar. Every op checks its output is finite and raises
:class:`~flowsentry.errors.NumericError` naming itself otherwise.
"""

from __future__ import annotations

import numpy as np

from . import kernel
from .errors import NumericError, ShapeError


class Tensor:
    __slots__ = ("data", "parents", "backward", "op", "requires_grad")

    def __init__(self, data, requires_grad=False, op="input", parents=(), backward=None):
        data = np.asarray(data, dtype=np.float64)
        if not np.isfinite(data).all():
            raise NumericError(op)
        self.data = data
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self.parents = parents if self.requires_grad else ()
        self.backward = backward if self.requires_grad else None
        self.op = op

    @property
    def shape(self):
        return self.data.shape

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(op={self.op!r}, shape={self.data.shape})"

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(g, shape):
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _broadcast_shape(op, a, b):
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} do not broadcast") from None


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("add", a, b)
    return Tensor(a.data + b.data, op="add", parents=(a, b),
                  backward=lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("sub", a, b)
    return Tensor(a.data - b.data, op="sub", parents=(a, b),
                  backward=lambda g: (_unbroadcast(g, a.shape), -_unbroadcast(g, b.shape)))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("mul", a, b)
    return Tensor(a.data * b.data, op="mul", parents=(a, b),
                  backward=lambda g: (_unbroadcast(g * b.data, a.shape),
                                      _unbroadcast(g * a.data, b.shape)))


def scale(a, c: float) -> Tensor:
    a = as_tensor(a)
    return Tensor(a.data * c, op="scale", parents=(a,), backward=lambda g: (g * c,))


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    return Tensor(a.data @ b.data, op="matmul", parents=(a, b),
                  backward=lambda g: (g @ b.data.T, a.data.T @ g))


def relu(a, op="relu") -> Tensor:
    a = as_tensor(a)
    on = a.data > 0
    return Tensor(np.where(on, a.data, 0.0), op=op, parents=(a,),
                  backward=lambda g: (g * on,))


def hinge(a) -> Tensor:
    """``max(0, a)`` elementwise."""
    return relu(a, op="hinge")


def exp(a) -> Tensor:
    a = as_tensor(a)
    with np.errstate(over="ignore"):
        out = np.exp(a.data)
    if not np.isfinite(out).all():
        raise NumericError("exp", "overflow")
    return Tensor(out, op="exp", parents=(a,), backward=lambda g: (g * out,))


def total(a) -> Tensor:
    a = as_tensor(a)
    return Tensor(a.data.sum(), op="sum", parents=(a,),
                  backward=lambda g: (np.broadcast_to(g, a.shape).copy(),))


def mean(a) -> Tensor:
    a = as_tensor(a)
    size = a.data.size
    return Tensor(a.data.mean(), op="mean", parents=(a,),
                  backward=lambda g: (np.full(a.shape, g / size),))


def _safe_div(num, den):
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=den > 0)
    return out


def row_norm(a) -> Tensor:
    """Euclidean norm of every row; the subgradient at a zero row is zero."""
    a = as_tensor(a)
    if a.data.ndim != 2:
        raise ShapeError(f"row_norm expects a matrix, got shape {a.shape}")
    out = np.sqrt((a.data * a.data).sum(axis=1))
    return Tensor(out, op="row_norm", parents=(a,),
                  backward=lambda g: (_safe_div(a.data, out[:, None]) * g[:, None],))


def frobenius(a) -> Tensor:
    a = as_tensor(a)
    out = np.sqrt((a.data * a.data).sum())
    return Tensor(out, op="frobenius", parents=(a,),
                  backward=lambda g: (_safe_div(a.data, np.full(a.shape, out)) * g,))


def softmax_rows(a, subtract_max: bool = True) -> Tensor:
    """Row-wise softmax, optionally after subtracting each row's maximum."""
    a = as_tensor(a)
    z = a.data - a.data.max(axis=1, keepdims=True) if subtract_max else a.data
    with np.errstate(over="ignore"):
        e = np.exp(z)
    if not np.isfinite(e).all():
        raise NumericError("softmax", "overflow in exp; enable max subtraction")
    s = e / e.sum(axis=1, keepdims=True)

    def backward(g):
        return (s * (g - (g * s).sum(axis=1, keepdims=True)),)

    return Tensor(s, op="softmax", parents=(a,), backward=backward)


def neighbor_mean(h, indptr, indices) -> Tensor:
    """Mean of neighbor rows over a CSR adjacency; isolated rows give zeros."""
    h = as_tensor(h)
    if indices.size and indices.max() >= h.shape[0]:
        raise ShapeError(f"neighbor_mean: adjacency references row beyond {h.shape[0]}")
    out = kernel.neighbor_mean(indptr, indices, h.data)
    return Tensor(out, op="neighbor_mean", parents=(h,),
                  backward=lambda g: (kernel.neighbor_mean_adjoint(indptr, indices, g,
                                                                    h.shape[0]),))


def _topological(root: Tensor) -> list[Tensor]:
    order, seen, stack = [], set(), [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order[::-1]


def backprop(loss: Tensor) -> dict[int, np.ndarray]:
    """Gradients of a scalar ``loss`` keyed by ``id`` of every reachable tensor."""
    if loss.data.shape != ():
        raise ShapeError(f"loss must be a scalar, got shape {loss.shape}")
    if not np.isfinite(loss.data):
        raise NumericError(loss.op, "loss is not finite")
    grads = {id(loss): np.ones(())}
    for node in _topological(loss):
        g = grads.get(id(node))
        if g is None or node.backward is None:
            continue  # leaves keep their accumulated gradient
        del grads[id(node)]
        for parent, pg in zip(node.parents, node.backward(g)):
            if not parent.requires_grad:
                continue
            if not np.isfinite(pg).all():
                raise NumericError(node.op, "non-finite gradient")
            key = id(parent)
            grads[key] = grads[key] + pg if key in grads else pg
    return grads


def gradients(loss: Tensor, params: dict[str, Tensor]) -> dict[str, np.ndarray]:
    """``d loss / d param`` for every named leaf; unreachable params get zeros."""
    grads = backprop(loss)
    return {name: np.asarray(grads.get(id(t), np.zeros(t.shape)), dtype=np.float64)
                  .reshape(t.shape)
            for name, t in params.items()}
