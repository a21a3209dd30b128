"""Minimal reverse-mode automatic differentiation on numpy float64 arrays.

Every vector-Jacobian product is itself built from Tensor operations, so the
cotangent graph can be differentiated again: parameter gradients of losses
that contain input gradients (the nested case) come out of the same grad()
call.  Correctness is defined against central finite differences, which the
test suite applies to every gradient path.
"""

from __future__ import annotations

import numpy as np

__all__ = ["Tensor", "constant", "grad", "matmul", "tanh", "sigmoid", "softplus",
           "log", "exp", "abspow", "tsum", "reshape", "concatenate"]


class Tensor:
    __slots__ = ("data", "parents", "vjp")

    def __init__(self, data, parents=(), vjp=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.parents = parents
        self.vjp = vjp

    @property
    def shape(self):
        return self.data.shape

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        return add(self, _wrap(other))

    __radd__ = __add__

    def __neg__(self):
        return mul(self, _wrap(-1.0))

    def __sub__(self, other):
        return add(self, -_wrap(other))

    def __rsub__(self, other):
        return add(_wrap(other), -self)

    def __mul__(self, other):
        return mul(self, _wrap(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return mul(self, power(_wrap(other), -1.0))

    def __rtruediv__(self, other):
        return mul(_wrap(other), power(self, -1.0))

    def __pow__(self, p):
        return power(self, p)

    def __matmul__(self, other):
        return matmul(self, _wrap(other))

    def __getitem__(self, idx):
        return getitem(self, idx)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape})"


def _wrap(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def constant(x):
    return Tensor(x)


def _unbroadcast(ct: Tensor, shape) -> Tensor:
    """Reduce a cotangent back to the shape of a broadcast operand."""
    if ct.data.shape == tuple(shape):
        return ct
    extra = ct.data.ndim - len(shape)
    for _ in range(extra):
        ct = tsum(ct, axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and ct.data.shape[ax] != 1:
            ct = tsum(ct, axis=ax, keepdims=True)
    return reshape(ct, shape)


def add(a: Tensor, b: Tensor) -> Tensor:
    return Tensor(a.data + b.data, (a, b),
                  lambda ct: (_unbroadcast(ct, a.data.shape),
                              _unbroadcast(ct, b.data.shape)))


def mul(a: Tensor, b: Tensor) -> Tensor:
    return Tensor(a.data * b.data, (a, b),
                  lambda ct: (_unbroadcast(mul(ct, b), a.data.shape),
                              _unbroadcast(mul(ct, a), b.data.shape)))


def power(a: Tensor, p: float) -> Tensor:
    p = float(p)
    out = Tensor(a.data ** p, (a,),
                 lambda ct: (mul(ct, mul(_wrap(p), power(a, p - 1.0))),))
    return out


def abspow(a: Tensor, p: float) -> Tensor:
    """|a|^p with derivative p sign(a) |a|^{p-1}; the derivative at 0 is taken
    as 0 (valid for p > 1, the only exponents used)."""
    p = float(p)
    sgn = np.sign(a.data)

    def vjp(ct):
        return (mul(ct, mul(_wrap(p * sgn), abspow(a, p - 1.0))),)

    return Tensor(np.abs(a.data) ** p, (a,), vjp)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    def vjp(ct):
        return (matmul(ct, transpose(b)), matmul(transpose(a), ct))

    return Tensor(a.data @ b.data, (a, b), vjp)


def transpose(a: Tensor) -> Tensor:
    return Tensor(a.data.T, (a,), lambda ct: (transpose(ct),))


def tanh(a: Tensor) -> Tensor:
    y = Tensor(np.tanh(a.data), (a,), None)
    y.vjp = lambda ct: (mul(ct, 1.0 - mul(y, y)),)
    return y


def sigmoid(a: Tensor) -> Tensor:
    val = np.where(a.data >= 0, 1.0 / (1.0 + np.exp(-np.abs(a.data))),
                   np.exp(-np.abs(a.data)) / (1.0 + np.exp(-np.abs(a.data))))
    y = Tensor(val, (a,), None)
    y.vjp = lambda ct: (mul(ct, mul(y, 1.0 - y)),)
    return y


def softplus(a: Tensor) -> Tensor:
    return Tensor(np.logaddexp(0.0, a.data), (a,),
                  lambda ct: (mul(ct, sigmoid(a)),))


def log(a: Tensor) -> Tensor:
    return Tensor(np.log(a.data), (a,),
                  lambda ct: (mul(ct, power(a, -1.0)),))


def exp(a: Tensor) -> Tensor:
    y = Tensor(np.exp(a.data), (a,), None)
    y.vjp = lambda ct: (mul(ct, y),)
    return y


def clip(a: Tensor, lo: float, hi: float) -> Tensor:
    mask = ((a.data > lo) & (a.data < hi)).astype(float)
    return Tensor(np.clip(a.data, lo, hi), (a,),
                  lambda ct: (mul(ct, _wrap(mask)),))


def tsum(a: Tensor, axis=None, keepdims=False) -> Tensor:
    shape = a.data.shape

    def vjp(ct):
        if axis is None:
            return (mul(ct, _wrap(np.ones(shape))),)
        c = ct if keepdims else reshape(ct, _keepdims_shape(shape, axis))
        return (mul(c, _wrap(np.ones(shape))),)

    return Tensor(np.sum(a.data, axis=axis, keepdims=keepdims), (a,), vjp)


def _keepdims_shape(shape, axis):
    s = list(shape)
    s[axis] = 1
    return tuple(s)


def tmean(a: Tensor, axis=None, keepdims=False) -> Tensor:
    n = a.data.size if axis is None else a.data.shape[axis]
    return mul(tsum(a, axis=axis, keepdims=keepdims), _wrap(1.0 / n))


def reshape(a: Tensor, shape) -> Tensor:
    orig = a.data.shape
    return Tensor(a.data.reshape(shape), (a,),
                  lambda ct: (reshape(ct, orig),))


def getitem(a: Tensor, idx) -> Tensor:
    shape = a.data.shape
    return Tensor(a.data[idx], (a,),
                  lambda ct: (_scatter(ct, idx, shape),))


def _scatter(ct: Tensor, idx, shape) -> Tensor:
    buf = np.zeros(shape)
    buf[idx] = ct.data
    return Tensor(buf, (ct,), lambda c2: (getitem(c2, idx),))


def concatenate(tensors, axis=0) -> Tensor:
    tensors = [_wrap(t) for t in tensors]
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def vjp(ct):
        outs = []
        for k, t in enumerate(tensors):
            sl = [slice(None)] * ct.data.ndim
            sl[axis] = slice(offsets[k], offsets[k + 1])
            outs.append(getitem(ct, tuple(sl)))
        return tuple(outs)

    return Tensor(np.concatenate([t.data for t in tensors], axis=axis),
                  tuple(tensors), vjp)


def grad(output: Tensor, wrt, output_ct=None):
    """Cotangents of `output` with respect to each tensor in `wrt`.

    The returned tensors are themselves graph nodes, so they can be fed back
    into grad() for higher-order derivatives.
    """
    single = isinstance(wrt, Tensor)
    targets = [wrt] if single else list(wrt)

    topo, visited, stack = [], set(), [(output, False)]
    while stack:
        node, done = stack.pop()
        if done:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in visited:
                stack.append((p, False))

    cts = {id(output): output_ct if output_ct is not None
           else _wrap(np.ones_like(output.data))}
    for node in reversed(topo):
        ct = cts.get(id(node))
        if ct is None or node.vjp is None:
            continue
        for parent, pct in zip(node.parents, node.vjp(ct)):
            if pct is None:
                continue
            prev = cts.get(id(parent))
            cts[id(parent)] = pct if prev is None else add(prev, pct)

    outs = [cts.get(id(t)) if cts.get(id(t)) is not None
            else _wrap(np.zeros_like(t.data)) for t in targets]
    return outs[0] if single else outs
