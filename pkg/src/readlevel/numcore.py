"""Minimal dense-tensor engine with reverse-mode automatic differentiation.

Tensors wrap numpy arrays and record the operations applied to them; calling
:func:`backward` on a scalar result fills the ``grad`` buffer of every tensor
created with ``requires_grad=True``.  The op set is exactly what the encoder,
embedding, and loss computations need; nothing here batches beyond 2-D.

Gradients are plain analytic rules, each one validated against central finite
differences in the test suite.  Default training precision is float32;
float64 is used wherever gradients are being checked.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Tensor",
    "ParameterStore",
    "backward",
    "matmul",
    "add",
    "sub",
    "mul",
    "neg",
    "scale",
    "concat",
    "relu",
    "tanh",
    "sigmoid",
    "log_sigmoid",
    "exp",
    "log",
    "softmax",
    "layer_norm",
    "transpose",
    "row_select",
    "tensor_sum",
    "adam_step",
    "sgd_step",
    "seeded_rng",
    "init_uniform",
]


class Tensor:
    """A dense array with an optional gradient buffer and graph link."""

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, _parents=(), _backward=None):
        self.data = np.asarray(data)
        self.requires_grad = requires_grad
        self.grad = None
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, parents, backward_fn) -> Tensor:
    if any(p.requires_grad for p in parents):
        return Tensor(data, requires_grad=True, _parents=parents, _backward=backward_fn)
    return Tensor(data)


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum gradient ``g`` down to ``shape`` (reverse of numpy broadcasting)."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def backward(loss: Tensor) -> None:
    """Populate grads of every tracked tensor reachable from scalar ``loss``."""
    if loss.data.size != 1:
        raise ValueError(f"backward needs a scalar loss, got shape {loss.data.shape}")
    if not loss.requires_grad:
        raise ValueError("loss is not connected to any tracked tensor")
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
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in seen:
                stack.append((parent, False))
    loss.grad = np.ones_like(loss.data)
    for node in reversed(order):
        if node._backward is not None:
            node._backward(node.grad)


# ---------------------------------------------------------------------------
# Core ops
# ---------------------------------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.data.shape} @ {b.data.shape}")
    out_data = a.data @ b.data

    def backward_fn(g):
        if a.requires_grad:
            _accumulate(a, g @ b.data.T)
        if b.requires_grad:
            _accumulate(b, a.data.T @ g)

    return _make(out_data, (a, b), backward_fn)


def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        out_data = a.data + b.data
    except ValueError:
        raise ValueError(f"add shape mismatch: {a.data.shape} + {b.data.shape}")

    def backward_fn(g):
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g, a.data.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(g, b.data.shape))

    return _make(out_data, (a, b), backward_fn)


def sub(a: Tensor, b: Tensor) -> Tensor:
    return add(a, neg(b))


def mul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        out_data = a.data * b.data
    except ValueError:
        raise ValueError(f"mul shape mismatch: {a.data.shape} * {b.data.shape}")

    def backward_fn(g):
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(g * a.data, b.data.shape))

    return _make(out_data, (a, b), backward_fn)


def neg(a: Tensor) -> Tensor:
    a = _as_tensor(a)

    def backward_fn(g):
        if a.requires_grad:
            _accumulate(a, -g)

    return _make(-a.data, (a,), backward_fn)


def scale(a: Tensor, s: float) -> Tensor:
    a = _as_tensor(a)
    s = float(s)

    def backward_fn(g):
        if a.requires_grad:
            _accumulate(a, g * s)

    return _make(a.data * s, (a,), backward_fn)


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = [_as_tensor(t) for t in tensors]
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward_fn(g):
        for t, start, stop in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                index = [slice(None)] * g.ndim
                index[axis] = slice(start, stop)
                _accumulate(t, g[tuple(index)])

    return _make(out_data, tuple(tensors), backward_fn)


def relu(a: Tensor) -> Tensor:
    a = _as_tensor(a)
    out_data = np.maximum(a.data, 0)

    def backward_fn(g):
        if a.requires_grad:
            _accumulate(a, g * (a.data > 0))

    return _make(out_data, (a,), backward_fn)


def tanh(a: Tensor) -> Tensor:
    a = _as_tensor(a)
    out_data = np.tanh(a.data)

    def backward_fn(g):
        if a.requires_grad:
            _accumulate(a, g * (1.0 - out_data * out_data))

    return _make(out_data, (a,), backward_fn)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid(a: Tensor) -> Tensor:
    a = _as_tensor(a)
    out_data = _sigmoid(a.data)

    def backward_fn(g):
        if a.requires_grad:
            _accumulate(a, g * out_data * (1.0 - out_data))

    return _make(out_data, (a,), backward_fn)


def log_sigmoid(a: Tensor) -> Tensor:
    """log(sigmoid(x)) computed stably as -log(1 + exp(-x))."""
    a = _as_tensor(a)
    out_data = -np.logaddexp(np.zeros_like(a.data), -a.data)

    def backward_fn(g):
        if a.requires_grad:
            _accumulate(a, g * _sigmoid(-a.data))

    return _make(out_data, (a,), backward_fn)


def exp(a: Tensor) -> Tensor:
    a = _as_tensor(a)
    out_data = np.exp(a.data)

    def backward_fn(g):
        if a.requires_grad:
            _accumulate(a, g * out_data)

    return _make(out_data, (a,), backward_fn)


def log(a: Tensor) -> Tensor:
    """Natural log; caller guarantees positive input."""
    a = _as_tensor(a)
    out_data = np.log(a.data)

    def backward_fn(g):
        if a.requires_grad:
            _accumulate(a, g / a.data)

    return _make(out_data, (a,), backward_fn)


def softmax(a: Tensor, axis: int = -1, mask: np.ndarray | None = None) -> Tensor:
    """Softmax along ``axis``; positions where ``mask`` is False get weight 0.

    Rows with no valid position come out as all zeros (and pass no gradient).
    """
    a = _as_tensor(a)
    x = a.data
    if mask is None:
        valid = np.ones(x.shape, dtype=bool)
    else:
        valid = np.asarray(mask, dtype=bool)
        if valid.shape != x.shape:
            raise ValueError(f"mask shape {valid.shape} != input shape {x.shape}")
    masked = np.where(valid, x, -np.inf)
    peak = masked.max(axis=axis, keepdims=True)
    peak = np.where(np.isneginf(peak), 0.0, peak)  # fully-masked rows
    exps = np.exp(np.where(valid, x - peak, -np.inf))
    denom = exps.sum(axis=axis, keepdims=True)
    out_data = exps / np.where(denom == 0.0, 1.0, denom)

    def backward_fn(g):
        if a.requires_grad:
            inner = (g * out_data).sum(axis=axis, keepdims=True)
            _accumulate(a, out_data * (g - inner))

    return _make(out_data, (a,), backward_fn)


def layer_norm(a: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to mean 0 / variance 1, then scale and shift."""
    a, gamma, beta = _as_tensor(a), _as_tensor(gamma), _as_tensor(beta)
    x = a.data
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x - mu) * inv
    out_data = xhat * gamma.data + beta.data

    def backward_fn(g):
        if gamma.requires_grad:
            _accumulate(gamma, _unbroadcast(g * xhat, gamma.data.shape))
        if beta.requires_grad:
            _accumulate(beta, _unbroadcast(g, beta.data.shape))
        if a.requires_grad:
            dxhat = g * gamma.data
            m1 = dxhat.mean(axis=-1, keepdims=True)
            m2 = (dxhat * xhat).mean(axis=-1, keepdims=True)
            _accumulate(a, inv * (dxhat - m1 - xhat * m2))

    return _make(out_data, (a, gamma, beta), backward_fn)


def transpose(a: Tensor) -> Tensor:
    a = _as_tensor(a)

    def backward_fn(g):
        if a.requires_grad:
            _accumulate(a, g.T)

    return _make(a.data.T, (a,), backward_fn)


def row_select(a: Tensor, indices) -> Tensor:
    """Select rows by integer index (embedding lookup); grads scatter-add."""
    a = _as_tensor(a)
    indices = np.asarray(indices, dtype=np.int64)
    out_data = a.data[indices]

    def backward_fn(g):
        if a.requires_grad:
            buf = np.zeros_like(a.data)
            np.add.at(buf, indices, g)
            _accumulate(a, buf)

    return _make(out_data, (a,), backward_fn)


def tensor_sum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    a = _as_tensor(a)
    out_data = a.data.sum(axis=axis, keepdims=keepdims)

    def backward_fn(g):
        if a.requires_grad:
            gg = np.asarray(g)
            if axis is not None and not keepdims:
                gg = np.expand_dims(gg, axis)
            _accumulate(a, np.broadcast_to(gg, a.data.shape).copy())

    return _make(out_data, (a,), backward_fn)


# ---------------------------------------------------------------------------
# Parameters and optimization
# ---------------------------------------------------------------------------

class ParameterStore:
    """Ordered name -> Tensor map with per-parameter Adam state."""

    def __init__(self):
        self._params: dict[str, Tensor] = {}
        self._moments: dict[str, tuple[np.ndarray, np.ndarray]] = {}
        self.step_count = 0

    def add(self, name: str, tensor: Tensor) -> Tensor:
        if name in self._params:
            raise ValueError(f"duplicate parameter name {name!r}")
        tensor.requires_grad = True
        self._params[name] = tensor
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self):
        return list(self._params)

    def items(self):
        return self._params.items()

    def zero_grad(self) -> None:
        for p in self._params.values():
            p.grad = None

    def clone_data(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self._params.items()}


def adam_step(
    store: ParameterStore,
    lr: float = 0.001,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One bias-corrected Adam update over every parameter; clears grads."""
    missing = [name for name, p in store.items() if p.grad is None]
    if missing:
        raise ValueError(f"missing gradients for parameters: {missing}")
    store.step_count += 1
    t = store.step_count
    for name, p in store.items():
        if name not in store._moments:
            store._moments[name] = (np.zeros_like(p.data), np.zeros_like(p.data))
        m, v = store._moments[name]
        g = p.grad
        m[...] = beta1 * m + (1.0 - beta1) * g
        v[...] = beta2 * v + (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        p.data = p.data - (lr * m_hat / (np.sqrt(v_hat) + eps)).astype(p.data.dtype)
    store.zero_grad()


def sgd_step(store: ParameterStore, lr: float) -> None:
    """Plain gradient step; parameters without grads are left untouched."""
    for _, p in store.items():
        if p.grad is not None:
            p.data = p.data - (lr * p.grad).astype(p.data.dtype)
    store.zero_grad()


def seeded_rng(seed: int) -> np.random.Generator:
    """A reproducible random stream; same seed, same draws."""
    return np.random.default_rng(seed)


def init_uniform(shape, bound: float, rng: np.random.Generator, dtype=np.float32) -> Tensor:
    """Uniform init in [-bound, bound], tracked for gradients."""
    data = rng.uniform(-bound, bound, size=shape).astype(dtype)
    return Tensor(data, requires_grad=True)
