"""Reverse-mode automatic differentiation on numpy arrays.

A small tape-based engine in the micrograd style, but operating on whole
float64 ndarrays so that batched flow training stays vectorized.  Every
primitive records its parents and a closure that accumulates adjoints into
them; ``Tensor.backward`` runs the tape in reverse topological order.

The op set is exactly what the masked autoregressive flow needs: broadcast
arithmetic, 2-D matmul, tanh with a numerically stable log-derivative,
logsumexp (for composing log-space Jacobian blocks), reductions, reshape,
and a block-diagonal scatter.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Tensor",
    "add",
    "sub",
    "neg",
    "mul",
    "matmul",
    "exp",
    "log",
    "tanh",
    "log_sech2",
    "logsumexp",
    "log_matmul_exp",
    "tsum",
    "tmean",
    "reshape",
    "block_diag",
    "numerical_gradient",
]


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` (inverse of numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    ndiff = grad.ndim - len(shape)
    if ndiff > 0:
        grad = grad.sum(axis=tuple(range(ndiff)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


class Tensor:
    """Node in the computation graph: a value plus adjoint bookkeeping."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, parents=(), backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad) or any(p.requires_grad for p in parents)
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def _accumulate(self, g: np.ndarray):
        if self.grad is None:
            self.grad = g.copy()
        else:
            self.grad += g

    def backward(self):
        """Backpropagate from a scalar node."""
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar root")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # convenience operators used by tests; primitives below do the real work
    def __add__(self, other):
        return add(self, _lift(other))

    def __sub__(self, other):
        return sub(self, _lift(other))

    def __mul__(self, other):
        return mul(self, _lift(other))

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, _lift(other))

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def _lift(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def add(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data + b.data

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g, b.data.shape))

    return Tensor(out_data, parents=(a, b), backward=backward)


def sub(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data - b.data

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(-g, b.data.shape))

    return Tensor(out_data, parents=(a, b), backward=backward)


def neg(a: Tensor) -> Tensor:
    def backward(g):
        if a.requires_grad:
            a._accumulate(-g)

    return Tensor(-a.data, parents=(a,), backward=backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data * b.data

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g * a.data, b.data.shape))

    return Tensor(out_data, parents=(a, b), backward=backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """2-D matrix product."""
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ValueError("matmul expects 2-D operands")
    out_data = a.data @ b.data

    def backward(g):
        if a.requires_grad:
            a._accumulate(g @ b.data.T)
        if b.requires_grad:
            b._accumulate(a.data.T @ g)

    return Tensor(out_data, parents=(a, b), backward=backward)


def exp(a: Tensor) -> Tensor:
    out_data = np.exp(a.data)

    def backward(g):
        if a.requires_grad:
            a._accumulate(g * out_data)

    return Tensor(out_data, parents=(a,), backward=backward)


def log(a: Tensor) -> Tensor:
    out_data = np.log(a.data)

    def backward(g):
        if a.requires_grad:
            a._accumulate(g / a.data)

    return Tensor(out_data, parents=(a,), backward=backward)


def tanh(a: Tensor) -> Tensor:
    out_data = np.tanh(a.data)

    def backward(g):
        if a.requires_grad:
            a._accumulate(g * (1.0 - out_data * out_data))

    return Tensor(out_data, parents=(a,), backward=backward)


def log_sech2(a: Tensor) -> Tensor:
    """log(d tanh(x)/dx) = log sech^2(x), stable for large |x|."""
    ax = np.abs(a.data)
    out_data = 2.0 * (np.log(2.0) - ax - np.log1p(np.exp(-2.0 * ax)))

    def backward(g):
        if a.requires_grad:
            a._accumulate(g * (-2.0 * np.tanh(a.data)))

    return Tensor(out_data, parents=(a,), backward=backward)


def logsumexp(a: Tensor, axis: int = -1, keepdims: bool = True) -> Tensor:
    m = np.max(a.data, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    s = np.sum(np.exp(a.data - m), axis=axis, keepdims=True)
    out_keep = m + np.log(s)
    out_data = out_keep if keepdims else np.squeeze(out_keep, axis=axis)

    def backward(g):
        if a.requires_grad:
            gk = g if keepdims else np.expand_dims(g, axis=axis)
            a._accumulate(gk * np.exp(a.data - out_keep))

    return Tensor(out_data, parents=(a,), backward=backward)


def log_matmul_exp(c: Tensor, w: Tensor) -> Tensor:
    """out[n,d,o] = log sum_k exp(c[n,d,k] + w[d,k,o]), max-shifted for stability.

    The inner contraction runs as an einsum on exponentials, so no
    (n, d, k, o) intermediate is ever materialized.
    """
    if c.data.ndim != 3 or w.data.ndim != 3:
        raise ValueError("log_matmul_exp expects (n,d,k) and (d,k,o)")
    m = np.max(c.data, axis=2, keepdims=True)            # (n, d, 1)
    wc = np.max(w.data, axis=1, keepdims=True)           # (d, 1, o)
    exp_c = np.exp(c.data - m)
    exp_w = np.exp(w.data - wc)
    # batched over d with BLAS: (d, n, k) @ (d, k, o) -> (d, n, o)
    exp_c_d = np.ascontiguousarray(exp_c.transpose(1, 0, 2))
    prod_d = np.matmul(exp_c_d, exp_w)
    prod = prod_d.transpose(1, 0, 2)
    out_data = np.log(prod) + m + wc[None, :, 0, :]

    def backward(g):
        t_d = np.ascontiguousarray((g / prod).transpose(1, 0, 2))  # (d, n, o)
        if c.requires_grad:
            gc = np.matmul(t_d, exp_w.transpose(0, 2, 1))          # (d, n, k)
            c._accumulate(exp_c * gc.transpose(1, 0, 2))
        if w.requires_grad:
            gw = np.matmul(exp_c_d.transpose(0, 2, 1), t_d)        # (d, k, o)
            w._accumulate(exp_w * gw)

    return Tensor(out_data, parents=(c, w), backward=backward)


def tsum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out_data = np.sum(a.data, axis=axis, keepdims=keepdims)

    def backward(g):
        if not a.requires_grad:
            return
        if axis is None:
            a._accumulate(np.broadcast_to(g, a.data.shape).copy())
        else:
            gk = g if keepdims else np.expand_dims(g, axis=axis)
            a._accumulate(np.broadcast_to(gk, a.data.shape).copy())

    return Tensor(out_data, parents=(a,), backward=backward)


def tmean(a: Tensor) -> Tensor:
    n = a.data.size
    out_data = np.mean(a.data)

    def backward(g):
        if a.requires_grad:
            a._accumulate(np.broadcast_to(g / n, a.data.shape).copy())

    return Tensor(out_data, parents=(a,), backward=backward)


def reshape(a: Tensor, shape) -> Tensor:
    out_data = a.data.reshape(shape)

    def backward(g):
        if a.requires_grad:
            a._accumulate(g.reshape(a.data.shape))

    return Tensor(out_data, parents=(a,), backward=backward)


def block_diag(a: Tensor, n_blocks: int) -> Tensor:
    """Scatter (n_blocks, r, c) blocks onto the diagonal of an (n_blocks*r, n_blocks*c) matrix."""
    nb, r, c = a.data.shape
    if nb != n_blocks:
        raise ValueError("block count mismatch")
    out_data = np.zeros((nb * r, nb * c))
    for i in range(nb):
        out_data[i * r : (i + 1) * r, i * c : (i + 1) * c] = a.data[i]

    def backward(g):
        if a.requires_grad:
            ga = np.empty_like(a.data)
            for i in range(nb):
                ga[i] = g[i * r : (i + 1) * r, i * c : (i + 1) * c]
            a._accumulate(ga)

    return Tensor(out_data, parents=(a,), backward=backward)


def numerical_gradient(fn, tensors, h: float = 1e-5):
    """Central-difference gradient of scalar ``fn()`` w.r.t. each tensor's entries."""
    grads = []
    for t in tensors:
        g = np.zeros_like(t.data)
        flat = t.data.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = fn()
            flat[i] = orig - h
            fm = fn()
            flat[i] = orig
            gflat[i] = (fp - fm) / (2.0 * h)
        grads.append(g)
    return grads
