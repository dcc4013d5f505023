"""Dense float64 tensors with reverse-mode automatic differentiation.

Only what a desk-scale transformer needs: broadcasting arithmetic, batched
matmul, a handful of pointwise functions, softmax/log-softmax over the last
axis, cumulative sums, layer norm, gathers and the masked cross-entropy loss.
Every op registers a backward closure; :func:`grad_check` compares those
closures against central differences.
"""

from __future__ import annotations

import contextlib
import itertools
import math
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "Tensor",
    "NonFiniteError",
    "ShapeError",
    "no_grad",
    "is_grad_enabled",
    "tensor",
    "matmul",
    "softmax_lastdim",
    "log_softmax_lastdim",
    "cumsum_lastdim",
    "elementwise",
    "cross_entropy",
    "layer_norm",
    "embedding",
    "concat",
    "dropout",
    "grad_check",
]

_node_ids = itertools.count()
_grad_enabled = True


class ShapeError(ValueError):
    """Operand shapes are incompatible with the requested op."""


class NonFiniteError(FloatingPointError):
    """A NaN or Inf showed up where finite values are required."""


@contextlib.contextmanager
def no_grad():
    """Build no graph inside the block; results are plain constant tensors."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def is_grad_enabled() -> bool:
    return _grad_enabled


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """A node in the computation graph.

    ``data`` is a float64 ndarray.  ``grad`` is filled by :meth:`backward` for
    every tensor created with ``requires_grad=True`` that the output depends on.
    """

    __slots__ = ("data", "grad", "requires_grad", "id", "op", "_parents", "_backward")
    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False, _parents: tuple = (),
                 _backward: Callable | None = None, op: str = "leaf"):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.id = next(_node_ids)
        self.op = op
        self._parents = _parents
        self._backward = _backward

    # -- basic properties --------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def T(self) -> "Tensor":
        return self.transpose()

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self.op}, requires_grad={self.requires_grad})"

    # -- graph --------------------------------------------------------------
    def backward(self, grad: np.ndarray | None = None) -> None:
        """Accumulate d(self)/d(leaf) into ``.grad`` of every upstream node."""
        if grad is None:
            if self.data.size != 1:
                raise ShapeError("backward() without a seed gradient needs a scalar output")
            grad = np.ones_like(self.data)
        order = self._topo_order()
        grads: dict[int, np.ndarray] = {self.id: np.asarray(grad, dtype=np.float64)}
        for node in reversed(order):
            g = grads.pop(node.id, None)
            if g is None:
                continue
            if node.requires_grad:
                node.grad = g if node.grad is None else node.grad + g
            if node._backward is None:
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                if parent.id in grads:
                    grads[parent.id] = grads[parent.id] + pg
                else:
                    grads[parent.id] = pg

    def _topo_order(self) -> list["Tensor"]:
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if node.id in seen:
                continue
            seen.add(node.id)
            stack.append((node, True))
            for parent in reversed(node._parents):
                if parent.id not in seen and parent.requires_grad:
                    stack.append((parent, False))
        return order

    # -- operators -----------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(_as_tensor(other)))

    def __rsub__(self, other):
        return add(_as_tensor(other), neg(self))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(_as_tensor(other), self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return getitem(self, index)

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        return tmean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes) -> "Tensor":
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes or None)

    def exp(self) -> "Tensor":
        return exp(self)

    def log(self) -> "Tensor":
        return log(self)

    def tanh(self) -> "Tensor":
        return tanh(self)


def tensor(data, requires_grad: bool = False) -> Tensor:
    return Tensor(np.array(data, dtype=np.float64), requires_grad=requires_grad)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data: np.ndarray, parents: Sequence[Tensor], backward: Callable, op: str) -> Tensor:
    if _grad_enabled and any(p.requires_grad for p in parents):
        return Tensor(data, requires_grad=True, _parents=tuple(parents), _backward=backward, op=op)
    return Tensor(data, op=op)


# -- arithmetic ------------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        out = a.data + b.data
    except ValueError as exc:
        raise ShapeError(f"cannot broadcast {a.shape} and {b.shape}") from exc
    sa, sb = a.shape, b.shape
    return _make(out, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)), "add")


def neg(a: Tensor) -> Tensor:
    return _make(-a.data, (a,), lambda g: (-g,), "neg")


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        out = a.data * b.data
    except ValueError as exc:
        raise ShapeError(f"cannot broadcast {a.shape} and {b.shape}") from exc
    ad, bd = a.data, b.data

    def backward(g):
        return _unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)

    return _make(out, (a, b), backward, "mul")


def div(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        out = a.data / b.data
    except ValueError as exc:
        raise ShapeError(f"cannot broadcast {a.shape} and {b.shape}") from exc
    ad, bd = a.data, b.data

    def backward(g):
        return (_unbroadcast(g / bd, ad.shape),
                _unbroadcast(-g * ad / (bd * bd), bd.shape))

    return _make(out, (a, b), backward, "div")


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)
    return _make(a.data * c, (a,), lambda g: (g * c,), "scale")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product with numpy batch broadcasting over leading axes."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul shape mismatch: {a.shape} x {b.shape}")
    try:
        out = np.matmul(a.data, b.data)
    except ValueError as exc:
        raise ShapeError(f"matmul shape mismatch: {a.shape} x {b.shape}") from exc
    ad, bd = a.data, b.data

    def backward(g):
        ga = np.matmul(g, np.swapaxes(bd, -1, -2))
        gb = np.matmul(np.swapaxes(ad, -1, -2), g)
        return _unbroadcast(ga, ad.shape), _unbroadcast(gb, bd.shape)

    return _make(out, (a, b), backward, "matmul")


# -- pointwise ---------------------------------------------------------------------

def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    return _make(out, (a,), lambda g: (g * out,), "exp")


def log(a: Tensor) -> Tensor:
    ad = a.data
    return _make(np.log(ad), (a,), lambda g: (g / ad,), "log")


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)
    return _make(out, (a,), lambda g: (g * (1.0 - out * out),), "tanh")


def relu(a: Tensor) -> Tensor:
    pos = a.data > 0
    return _make(np.where(pos, a.data, 0.0), (a,), lambda g: (g * pos,), "relu")


def square(a: Tensor) -> Tensor:
    ad = a.data
    return _make(ad * ad, (a,), lambda g: (2.0 * g * ad,), "square")


def absolute(a: Tensor) -> Tensor:
    ad = a.data
    return _make(np.abs(ad), (a,), lambda g: (g * np.sign(ad),), "abs")


def maximum(a: Tensor, floor: float) -> Tensor:
    """Elementwise max against a constant; gradient passes where a > floor."""
    keep = a.data > floor
    return _make(np.where(keep, a.data, floor), (a,), lambda g: (g * keep,), "maximum")


_ELEMENTWISE = {
    "tanh": tanh,
    "exp": exp,
    "log": log,
    "relu": relu,
    "square": square,
    "abs": absolute,
    "add": add,
    "mul": mul,
    "div": div,
    "scale": scale,
}


def elementwise(f: str, *operands) -> Tensor:
    """Dispatch a named pointwise op: ``elementwise("tanh", x)``, ``elementwise("scale", x, 0.5)``."""
    try:
        fn = _ELEMENTWISE[f]
    except KeyError:
        raise ValueError(f"unknown elementwise op {f!r}") from None
    return fn(*operands)


# -- reductions and reshaping ------------------------------------------------------

def tsum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    shape = a.shape
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)

    return _make(out, (a,), backward, "sum")


def tmean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    n = a.data.size if axis is None else np.prod([a.shape[i] for i in np.atleast_1d(axis)])
    return scale(tsum(a, axis=axis, keepdims=keepdims), 1.0 / float(n))


def reshape(a: Tensor, shape) -> Tensor:
    orig = a.shape
    try:
        out = a.data.reshape(shape)
    except ValueError as exc:
        raise ShapeError(f"cannot reshape {orig} to {shape}") from exc
    return _make(out, (a,), lambda g: (g.reshape(orig),), "reshape")


def transpose(a: Tensor, axes=None) -> Tensor:
    if axes is None:
        axes = tuple(range(a.ndim))[::-1]
    inv = tuple(np.argsort(axes))
    return _make(np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inv),), "transpose")


def getitem(a: Tensor, index) -> Tensor:
    shape = a.shape
    out = a.data[index]

    def backward(g):
        full = np.zeros(shape)
        np.add.at(full, index, g)
        return (full,)

    return _make(np.array(out, dtype=np.float64), (a,), backward, "getitem")


def embedding(table: Tensor, ids) -> Tensor:
    """Rows of ``table`` selected by an integer array of any shape."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise IndexError(f"token id out of range [0, {table.shape[0]})")
    shape = table.shape

    def backward(g):
        full = np.zeros(shape)
        np.add.at(full, ids.reshape(-1), g.reshape(-1, shape[-1]))
        return (full,)

    return _make(table.data[ids], (table,), backward, "embedding")


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = [_as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))

    return _make(out, tuple(tensors), backward, "concat")


def cumsum_lastdim(a: Tensor) -> Tensor:
    """Inclusive prefix sum along the last axis; backward is the reversed prefix sum."""
    out = np.cumsum(a.data, axis=-1)

    def backward(g):
        return (np.flip(np.cumsum(np.flip(g, -1), axis=-1), -1),)

    return _make(out, (a,), backward, "cumsum")


# -- softmax family -------------------------------------------------------------------

def softmax_lastdim(a: Tensor, mask: np.ndarray | None = None) -> Tensor:
    """Softmax over the last axis.  ``mask`` (bool, broadcastable) marks allowed entries;
    disallowed entries get exactly zero weight.  Every row needs one allowed entry."""
    if a.shape[-1] < 1:
        raise ShapeError("softmax over an empty axis")
    x = a.data
    if mask is not None:
        x = np.where(mask, x, -np.inf)
    m = x.max(axis=-1, keepdims=True)
    if not np.all(np.isfinite(m)):
        raise NonFiniteError("softmax row has no finite allowed entry")
    e = np.exp(x - m)
    out = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        return (out * (g - (g * out).sum(axis=-1, keepdims=True)),)

    return _make(out, (a,), backward, "softmax")


def log_softmax_lastdim(a: Tensor) -> Tensor:
    x = a.data
    m = x.max(axis=-1, keepdims=True)
    lse = m + np.log(np.exp(x - m).sum(axis=-1, keepdims=True))
    out = x - lse
    probs = np.exp(out)

    def backward(g):
        return (g - probs * g.sum(axis=-1, keepdims=True),)

    return _make(out, (a,), backward, "log_softmax")


def cross_entropy(logits: Tensor, targets, mask=None) -> Tensor:
    """Mean negative log-likelihood of ``targets`` over positions where ``mask`` is true."""
    targets = np.asarray(targets, dtype=np.int64)
    V = logits.shape[-1]
    if targets.shape != logits.shape[:-1]:
        raise ShapeError(f"targets {targets.shape} do not match logits {logits.shape}")
    if mask is None:
        mask = np.ones(targets.shape, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if np.any(mask & ((targets < 0) | (targets >= V))):
        raise IndexError(f"target id out of range [0, {V})")
    count = int(mask.sum())
    if count == 0:
        raise ValueError("cross_entropy over an empty mask")
    safe = np.where(mask, targets, 0)
    x = logits.data
    m = x.max(axis=-1, keepdims=True)
    lse = m + np.log(np.exp(x - m).sum(axis=-1, keepdims=True))
    logp = x - lse
    picked = np.take_along_axis(logp, safe[..., None], axis=-1)[..., 0]
    loss = -(picked * mask).sum() / count

    def backward(g):
        grad = np.exp(logp)
        np.put_along_axis(grad, safe[..., None],
                          np.take_along_axis(grad, safe[..., None], axis=-1) - 1.0, axis=-1)
        grad *= (mask / count)[..., None]
        return (grad * g,)

    return _make(np.array(loss), (logits,), backward, "cross_entropy")


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then apply gain and bias."""
    xd = x.data
    mu = xd.mean(axis=-1, keepdims=True)
    xc = xd - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out = xhat * gain.data + bias.data
    gd = gain.data

    def backward(g):
        dxhat = g * gd
        dx = inv * (dxhat - dxhat.mean(axis=-1, keepdims=True)
                    - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True))
        lead = tuple(range(g.ndim - 1))
        return dx, (g * xhat).sum(axis=lead), g.sum(axis=lead)

    return _make(out, (x, gain, bias), backward, "layer_norm")


def dropout(x: Tensor, rate: float, rng: np.random.Generator | None) -> Tensor:
    if rate <= 0.0 or rng is None:
        return x
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return _make(x.data * keep, (x,), lambda g: (g * keep,), "dropout")


# -- gradient checking ------------------------------------------------------------------

def grad_check(f: Callable[[], Tensor], params: Iterable[Tensor], h: float = 1e-5,
               eps: float = 1e-8) -> float:
    """Largest relative disagreement between autodiff and central differences.

    For each parameter tensor P the error is ``max|a - n| / (max|n| + eps)``,
    with ``a`` the autodiff gradient and ``n`` the central difference
    ``(f(P + h) - f(P - h)) / 2h`` taken entry by entry.  The maximum over all
    parameters is returned.  Raises :class:`NonFiniteError` when the loss or a
    gradient is not finite.
    """
    params = list(params)
    for p in params:
        p.grad = None
    out = f()
    if out.size != 1:
        raise ShapeError("grad_check needs a scalar-valued computation")
    if not np.isfinite(out.data).all():
        raise NonFiniteError("loss is not finite")
    out.backward()
    worst = 0.0
    for p in params:
        analytic = np.zeros(p.shape) if p.grad is None else p.grad.copy()
        if not np.isfinite(analytic).all():
            raise NonFiniteError(f"non-finite autodiff gradient (node {p.id})")
        numeric = np.zeros(p.shape)
        flat = p.data.reshape(-1)
        num_flat = numeric.reshape(-1)
        with no_grad():
            for k in range(flat.size):
                orig = flat[k]
                flat[k] = orig + h
                up = f().item()
                flat[k] = orig - h
                down = f().item()
                flat[k] = orig
                if not (math.isfinite(up) and math.isfinite(down)):
                    raise NonFiniteError(f"non-finite loss while perturbing entry {k} of node {p.id}")
                num_flat[k] = (up - down) / (2.0 * h)
        err = np.abs(analytic - numeric).max(initial=0.0) / (np.abs(numeric).max(initial=0.0) + eps)
        worst = max(worst, float(err))
    for p in params:
        p.grad = None
    return worst
