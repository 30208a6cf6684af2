"""Small dense tensors with reverse-mode autodiff, MLPs and Adam.

Tensors wrap float64 numpy arrays. Every op records a backward closure on
its output; ``backward`` walks the graph in reverse topological order and
then drops the graph so each step gets a fresh tape.
"""
from __future__ import annotations

import contextlib
from typing import Callable, Iterable, Sequence

import numpy as np


class ShapeError(ValueError):
    """Raised when operand shapes are not conformable."""


class ContractError(ValueError):
    """Raised when an operation's precondition is violated."""


_GRAD_ENABLED = True


@contextlib.contextmanager
def no_grad():
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


def grad_enabled() -> bool:
    return _GRAD_ENABLED


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")
    __array_ufunc__ = None  # make numpy defer to the reflected Tensor ops

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], None] | None = None

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def detach(self) -> Tensor:
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    def _accumulate(self, g: np.ndarray):
        # never accumulate in place: ``g`` may be shared with another node
        if self.grad is None:
            self.grad = g.reshape(self.shape)
        else:
            self.grad = self.grad + g.reshape(self.shape)

    # graph construction -------------------------------------------------

    @staticmethod
    def _make(data: np.ndarray, parents: Sequence[Tensor], backward) -> Tensor:
        out = Tensor(data)
        if _GRAD_ENABLED and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._backward = backward
        return out

    def backward(self) -> dict:
        return backward(self)

    # arithmetic ---------------------------------------------------------

    def __add__(self, other):
        other = as_tensor(other)
        a, b = self, other

        def bw(g):
            if a.requires_grad:
                a._accumulate(_unbroadcast(g, a.shape))
            if b.requires_grad:
                b._accumulate(_unbroadcast(g, b.shape))

        return Tensor._make(a.data + b.data, (a, b), bw)

    __radd__ = __add__

    def __sub__(self, other):
        other = as_tensor(other)
        a, b = self, other

        def bw(g):
            if a.requires_grad:
                a._accumulate(_unbroadcast(g, a.shape))
            if b.requires_grad:
                b._accumulate(_unbroadcast(-g, b.shape))

        return Tensor._make(a.data - b.data, (a, b), bw)

    def __rsub__(self, other):
        return as_tensor(other) - self

    def __mul__(self, other):
        other = as_tensor(other)
        a, b = self, other

        def bw(g):
            if a.requires_grad:
                a._accumulate(_unbroadcast(g * b.data, a.shape))
            if b.requires_grad:
                b._accumulate(_unbroadcast(g * a.data, b.shape))

        return Tensor._make(a.data * b.data, (a, b), bw)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_tensor(other)
        a, b = self, other

        def bw(g):
            if a.requires_grad:
                a._accumulate(_unbroadcast(g / b.data, a.shape))
            if b.requires_grad:
                b._accumulate(_unbroadcast(-g * a.data / (b.data * b.data), b.shape))

        return Tensor._make(a.data / b.data, (a, b), bw)

    def __rtruediv__(self, other):
        return as_tensor(other) / self

    def __neg__(self):
        a = self
        return Tensor._make(-a.data, (a,), lambda g: a._accumulate(-g))

    def __pow__(self, p: float):
        a = self
        p = float(p)
        return Tensor._make(a.data**p, (a,), lambda g: a._accumulate(g * p * a.data ** (p - 1)))

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        a = self

        def bw(g):
            full = np.zeros_like(a.data)
            np.add.at(full, idx, g)
            a._accumulate(full)

        return Tensor._make(a.data[idx], (a,), bw)

    # reductions / shape -------------------------------------------------

    def sum(self, axis=None, keepdims: bool = False):
        a = self

        def bw(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            a._accumulate(np.broadcast_to(g, a.shape))

        return Tensor._make(a.data.sum(axis=axis, keepdims=keepdims), (a,), bw)

    def mean(self, axis=None, keepdims: bool = False):
        n = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    def reshape(self, *shape):
        a = self
        return Tensor._make(a.data.reshape(*shape), (a,), lambda g: a._accumulate(g.reshape(a.shape)))

    @property
    def T(self):
        a = self
        return Tensor._make(a.data.T, (a,), lambda g: a._accumulate(g.T))

    # elementwise functions ------------------------------------------------

    def exp(self):
        a = self
        out = np.exp(a.data)
        return Tensor._make(out, (a,), lambda g: a._accumulate(g * out))

    def log(self):
        a = self
        return Tensor._make(np.log(a.data), (a,), lambda g: a._accumulate(g / a.data))

    def sqrt(self):
        a = self
        out = np.sqrt(a.data)
        return Tensor._make(out, (a,), lambda g: a._accumulate(g * 0.5 / out))

    def tanh(self):
        a = self
        out = np.tanh(a.data)
        return Tensor._make(out, (a,), lambda g: a._accumulate(g * (1.0 - out * out)))

    def relu(self):
        a = self
        mask = a.data > 0
        return Tensor._make(a.data * mask, (a,), lambda g: a._accumulate(g * mask))

    def softplus(self):
        a = self
        out = np.logaddexp(0.0, a.data)
        sig = 0.5 * (1.0 + np.tanh(0.5 * a.data))
        return Tensor._make(out, (a,), lambda g: a._accumulate(g * sig))

    def clip(self, lo: float, hi: float):
        a = self
        mask = (a.data >= lo) & (a.data <= hi)
        return Tensor._make(np.clip(a.data, lo, hi), (a,), lambda g: a._accumulate(g * mask))

    def square(self):
        a = self
        return Tensor._make(a.data * a.data, (a,), lambda g: a._accumulate(2.0 * g * a.data))


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def parameter(data) -> Tensor:
    return Tensor(np.array(data, dtype=np.float64), requires_grad=True)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")

    def bw(g):
        if a.requires_grad:
            a._accumulate(g @ b.data.T)
        if b.requires_grad:
            b._accumulate(a.data.T @ g)

    return Tensor._make(a.data @ b.data, (a, b), bw)


def minimum(a, b) -> Tensor:
    """Elementwise min; the gradient goes to whichever side was selected (ties to ``a``)."""
    a, b = as_tensor(a), as_tensor(b)
    pick_a = a.data <= b.data

    def bw(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g * pick_a, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g * ~pick_a, b.shape))

    return Tensor._make(np.minimum(a.data, b.data), (a, b), bw)


def maximum(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    pick_a = a.data >= b.data

    def bw(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g * pick_a, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g * ~pick_a, b.shape))

    return Tensor._make(np.maximum(a.data, b.data), (a, b), bw)


def concat(tensors: Sequence, axis: int = -1) -> Tensor:
    ts = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in ts]
    bounds = np.cumsum(sizes)[:-1]

    def bw(g):
        for t, piece in zip(ts, np.split(g, bounds, axis=axis)):
            if t.requires_grad:
                t._accumulate(piece)

    return Tensor._make(np.concatenate([t.data for t in ts], axis=axis), ts, bw)


def norm(x, axis: int = -1) -> Tensor:
    """Euclidean norm along ``axis``. Zero vectors get a zero subgradient."""
    x = as_tensor(x)
    out = np.sqrt(np.sum(x.data * x.data, axis=axis))

    def bw(g):
        denom = np.expand_dims(out, axis)
        safe = np.where(denom > 0, denom, 1.0)
        x._accumulate(np.expand_dims(g, axis) * np.where(denom > 0, x.data / safe, 0.0))

    return Tensor._make(out, (x,), bw)


def logsumexp(x, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    m = np.max(x.data, axis=axis, keepdims=True)
    shifted = np.exp(x.data - m)
    s = shifted.sum(axis=axis, keepdims=True)
    out = (np.log(s) + m).squeeze(axis)

    def bw(g):
        x._accumulate(np.expand_dims(g, axis) * shifted / s)

    return Tensor._make(out, (x,), bw)


def log_softmax(x) -> Tensor:
    """Log-softmax over the last axis."""
    x = as_tensor(x)
    return x - logsumexp(x, axis=-1).reshape(*x.shape[:-1], 1)


def backward(loss: Tensor) -> dict:
    """Backpropagate from a scalar ``loss``; returns ``{leaf: grad}`` for reachable leaves."""
    if loss.data.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        return {}

    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))

    loss.grad = np.ones_like(loss.data)
    leaves = {}
    for node in reversed(order):
        if node._backward is None:
            leaves[node] = node.grad
            continue
        if node.grad is not None:
            node._backward(node.grad)
        # free the tape as we go
        node._backward = None
        node._parents = ()
        node.grad = None
    return leaves


# ---------------------------------------------------------------------------
# MLP


_ACTIVATIONS = {
    "relu": (lambda t: t.relu(), lambda x: np.maximum(x, 0.0)),
    "tanh": (lambda t: t.tanh(), np.tanh),
}


class Mlp:
    """Fully connected network; hidden layers use ``activation``, output is linear."""

    def __init__(self, widths: Sequence[int], activation: str = "relu", rng=None):
        if len(widths) < 2:
            raise ShapeError("an MLP needs at least input and output widths")
        if activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        rng = np.random.default_rng(rng)
        self.widths = list(widths)
        self.activation = activation
        self.weights: list[Tensor] = []
        self.biases: list[Tensor] = []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.weights.append(parameter(rng.uniform(-bound, bound, size=(fan_in, fan_out))))
            self.biases.append(parameter(rng.uniform(-bound, bound, size=(fan_out,))))

    @property
    def in_dim(self) -> int:
        return self.widths[0]

    @property
    def out_dim(self) -> int:
        return self.widths[-1]

    def parameters(self) -> list[Tensor]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def _check(self, shape):
        if len(shape) == 0 or shape[-1] != self.in_dim:
            raise ShapeError(f"input last dim {shape[-1] if shape else None} != MLP input width {self.in_dim}")

    def __call__(self, x) -> Tensor:
        return forward(self, x)

    def predict(self, x) -> np.ndarray:
        """Plain numpy forward pass, no tape."""
        x = np.asarray(x, dtype=np.float64)
        self._check(x.shape)
        squeeze = x.ndim == 1
        h = x[None, :] if squeeze else x
        act = _ACTIVATIONS[self.activation][1]
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w.data + b.data
            if i < last:
                h = act(h)
        return h[0] if squeeze else h

    def state_dict(self) -> list[np.ndarray]:
        return [p.data.copy() for p in self.parameters()]

    def load_state_dict(self, arrays: Iterable[np.ndarray]):
        params = self.parameters()
        arrays = list(arrays)
        if len(arrays) != len(params):
            raise ShapeError("state dict length mismatch")
        for p, a in zip(params, arrays):
            if p.shape != np.shape(a):
                raise ShapeError(f"state dict shape mismatch {p.shape} vs {np.shape(a)}")
            p.data = np.array(a, dtype=np.float64, copy=True)

    def clone(self) -> Mlp:
        twin = Mlp.__new__(Mlp)
        twin.widths = list(self.widths)
        twin.activation = self.activation
        twin.weights = [parameter(w.data.copy()) for w in self.weights]
        twin.biases = [parameter(b.data.copy()) for b in self.biases]
        return twin


def forward(mlp: Mlp, x) -> Tensor:
    x = as_tensor(x)
    mlp._check(x.shape)
    squeeze = x.ndim == 1
    h = x.reshape(1, -1) if squeeze else x
    act = _ACTIVATIONS[mlp.activation][0]
    last = len(mlp.weights) - 1
    for i, (w, b) in enumerate(zip(mlp.weights, mlp.biases)):
        h = matmul(h, w) + b
        if i < last:
            h = act(h)
    return h.reshape(-1) if squeeze else h


# ---------------------------------------------------------------------------
# Adam

BETA1 = 0.9
BETA2 = 0.999
ADAM_EPS = 1e-8


class AdamState:
    def __init__(self, params: Sequence[Tensor]):
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in params]
        self.v = [np.zeros_like(p.data) for p in params]


def adam_step(params: Sequence[Tensor], grads: Sequence[np.ndarray | None], state: AdamState,
              lr: float, betas=(BETA1, BETA2), eps: float = ADAM_EPS) -> AdamState:
    """One bias-corrected Adam update, in place. ``None`` grads count as zero."""
    b1, b2 = betas
    state.t += 1
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    for i, (p, g) in enumerate(zip(params, grads)):
        if g is None:
            g = np.zeros_like(p.data)
        if g.shape != p.data.shape or state.m[i].shape != p.data.shape:
            raise ShapeError(f"adam shapes disagree for parameter {i}")
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g
        p.data = p.data - lr * (state.m[i] / c1) / (np.sqrt(state.v[i] / c2) + eps)
    return state


class Adam:
    def __init__(self, params: Sequence[Tensor], lr: float = 1e-3):
        self.params = list(params)
        self.lr = lr
        self.state = AdamState(self.params)

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        adam_step(self.params, [p.grad for p in self.params], self.state, self.lr)

    def minimize(self, loss: Tensor) -> float:
        self.zero_grad()
        backward(loss)
        self.step()
        return loss.item()

    def state_dict(self) -> dict:
        return {"t": self.state.t, "m": [a.copy() for a in self.state.m], "v": [a.copy() for a in self.state.v]}
