"""Minimal reverse-mode differentiation over float64 numpy arrays.

Every operation records its parents and a closure that scatters the incoming
gradient back to them; `backward` runs the tape in reverse topological order.
Everything is float64: the model is desk-scale and the gradient checks need
the precision.
"""

from dataclasses import dataclass

import numpy as np

from .errors import GraphError, ShapeError

_grad_enabled = True


class no_grad:
    """Context manager disabling tape recording (inference mode)."""

    def __enter__(self):
        global _grad_enabled
        self._prev = _grad_enabled
        _grad_enabled = False
        return self

    def __exit__(self, *exc):
        global _grad_enabled
        _grad_enabled = self._prev
        return False


class Tensor:
    """A float64 array plus its place in the computation record."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_bw")

    def __init__(self, data, requires_grad=False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._bw = None

    @property
    def shape(self):
        return self.data.shape

    def item(self):
        return float(self.data)

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    def backward(self, seed=None):
        """Populate .grad on every reachable tensor that requires grad."""
        if seed is None:
            if self.data.ndim != 0:
                raise ShapeError("backward() without seed needs a scalar loss")
            seed = np.array(1.0)
        order = _toposort(self)
        _accum(self, np.asarray(seed, dtype=np.float64))
        for node in reversed(order):
            if node._bw is not None and node.grad is not None:
                node._bw(node.grad)

    # Operator sugar used by loss code; heavy model code calls the
    # functional ops below directly.
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def _toposort(root):
    """Iterative DFS topological order; flags cycles in the record."""
    order = []
    state = {}  # id -> 0 visiting, 1 done
    stack = [(root, iter(root._parents))]
    state[id(root)] = 0
    while stack:
        node, parents = stack[-1]
        advanced = False
        for p in parents:
            s = state.get(id(p))
            if s == 0:
                raise GraphError("cycle in computation record")
            if s is None:
                state[id(p)] = 0
                stack.append((p, iter(p._parents)))
                advanced = True
                break
        if not advanced:
            state[id(node)] = 1
            order.append(node)
            stack.pop()
    return order


def _accum(t, g):
    if t.grad is None:
        t.grad = np.array(g, dtype=np.float64) if np.isscalar(g) else g.copy()
    else:
        t.grad += g


def _node(data, parents, bw):
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._bw = bw
    return out


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(g, shape):
    """Reduce gradient g back to the given operand shape."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# elementwise
# ---------------------------------------------------------------------------

def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out_data = a.data + b.data

    def bw(g):
        if a.requires_grad:
            _accum(a, _unbroadcast(g, a.data.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(g, b.data.shape))

    return _node(out_data, (a, b), bw)


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out_data = a.data - b.data

    def bw(g):
        if a.requires_grad:
            _accum(a, _unbroadcast(g, a.data.shape))
        if b.requires_grad:
            _accum(b, -_unbroadcast(g, b.data.shape))

    return _node(out_data, (a, b), bw)


def neg(a):
    a = as_tensor(a)

    def bw(g):
        _accum(a, -g)

    return _node(-a.data, (a,), bw)


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out_data = a.data * b.data

    def bw(g):
        if a.requires_grad:
            _accum(a, _unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(g * a.data, b.data.shape))

    return _node(out_data, (a, b), bw)


def _sigmoid_raw(x):
    # two-branch form saturates instead of overflowing
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def sigmoid(a):
    a = as_tensor(a)
    s = _sigmoid_raw(a.data)

    def bw(g):
        _accum(a, g * s * (1.0 - s))

    return _node(s, (a,), bw)


def tanh(a):
    a = as_tensor(a)
    t = np.tanh(a.data)

    def bw(g):
        _accum(a, g * (1.0 - t * t))

    return _node(t, (a,), bw)


def exp(a):
    a = as_tensor(a)
    e = np.exp(a.data)

    def bw(g):
        _accum(a, g * e)

    return _node(e, (a,), bw)


def log(a, floor=None):
    """Natural log; with `floor`, inputs are clamped from below first."""
    a = as_tensor(a)
    x = a.data if floor is None else np.maximum(a.data, floor)
    out_data = np.log(x)

    def bw(g):
        gi = g / x
        if floor is not None:
            gi = np.where(a.data >= floor, gi, 0.0)
        _accum(a, gi)

    return _node(out_data, (a,), bw)


# ---------------------------------------------------------------------------
# linear algebra / shaping
# ---------------------------------------------------------------------------

def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim == 0 or b.data.ndim == 0 or a.data.ndim > 2 or b.data.ndim > 2:
        raise ShapeError(f"matmul supports 1D/2D operands, got {a.data.shape} @ {b.data.shape}")
    if a.data.shape[-1] != b.data.shape[0]:
        raise ShapeError(f"matmul inner dims differ: {a.data.shape} @ {b.data.shape}")
    out_data = a.data @ b.data
    an, bn = a.data.ndim, b.data.ndim

    def bw(g):
        if an == 2 and bn == 2:
            if a.requires_grad:
                _accum(a, g @ b.data.T)
            if b.requires_grad:
                _accum(b, a.data.T @ g)
        elif an == 2 and bn == 1:
            if a.requires_grad:
                _accum(a, np.outer(g, b.data))
            if b.requires_grad:
                _accum(b, a.data.T @ g)
        elif an == 1 and bn == 2:
            if a.requires_grad:
                _accum(a, b.data @ g)
            if b.requires_grad:
                _accum(b, np.outer(a.data, g))
        else:  # dot product
            if a.requires_grad:
                _accum(a, g * b.data)
            if b.requires_grad:
                _accum(b, g * a.data)

    return _node(out_data, (a, b), bw)


def dot(a, b):
    return matmul(a, b)


def tsum(a, axis=None):
    a = as_tensor(a)
    out_data = a.data.sum(axis=axis)

    def bw(g):
        if axis is None:
            _accum(a, np.broadcast_to(g, a.data.shape).copy())
        else:
            _accum(a, np.broadcast_to(np.expand_dims(g, axis), a.data.shape).copy())

    return _node(out_data, (a,), bw)


def reshape(a, shape):
    a = as_tensor(a)
    orig = a.data.shape

    def bw(g):
        _accum(a, g.reshape(orig))

    return _node(a.data.reshape(shape), (a,), bw)


def concat(vectors):
    """Concatenate 1D tensors."""
    vectors = [as_tensor(v) for v in vectors]
    sizes = [v.data.shape[0] for v in vectors]
    out_data = np.concatenate([v.data for v in vectors])

    def bw(g):
        off = 0
        for v, n in zip(vectors, sizes):
            if v.requires_grad:
                _accum(v, g[off:off + n])
            off += n

    return _node(out_data, tuple(vectors), bw)


def stack_rows(vectors):
    """Stack 1D tensors into a (n, d) matrix."""
    vectors = [as_tensor(v) for v in vectors]
    out_data = np.stack([v.data for v in vectors])

    def bw(g):
        for i, v in enumerate(vectors):
            if v.requires_grad:
                _accum(v, g[i])

    return _node(out_data, tuple(vectors), bw)


def pad_rows(a, before, after):
    """Zero-pad a (n, d) matrix with rows above and below."""
    a = as_tensor(a)
    n, d = a.data.shape
    out_data = np.zeros((before + n + after, d))
    out_data[before:before + n] = a.data

    def bw(g):
        _accum(a, g[before:before + n])

    return _node(out_data, (a,), bw)


def row(a, i):
    a = as_tensor(a)

    def bw(g):
        if a.grad is None:
            a.grad = np.zeros_like(a.data)
        a.grad[i] += g

    return _node(a.data[i], (a,), bw)


def rows(a, start, stop):
    a = as_tensor(a)

    def bw(g):
        if a.grad is None:
            a.grad = np.zeros_like(a.data)
        a.grad[start:stop] += g

    return _node(a.data[start:stop], (a,), bw)


def gather_rows(table, idx):
    """table[(idx)] with scatter-add backward; idx may be any int array."""
    table = as_tensor(table)
    idx = np.asarray(idx)
    out_data = table.data[idx]

    def bw(g):
        if table.grad is None:
            table.grad = np.zeros_like(table.data)
        np.add.at(table.grad, idx, g)

    return _node(out_data, (table,), bw)


def pick(v, i):
    """Scalar element of a 1D tensor."""
    v = as_tensor(v)

    def bw(g):
        if v.grad is None:
            v.grad = np.zeros_like(v.data)
        v.grad[i] += g

    return _node(v.data[i], (v,), bw)


def softmax(v):
    """Stable softmax over a 1D score vector."""
    v = as_tensor(v)
    if v.data.ndim != 1 or v.data.shape[0] == 0:
        raise ShapeError(f"softmax expects a non-empty 1D vector, got shape {v.data.shape}")
    shifted = v.data - v.data.max()
    e = np.exp(shifted)
    p = e / e.sum()

    def bw(g):
        _accum(v, p * (g - np.dot(p, g)))

    return _node(p, (v,), bw)


# ---------------------------------------------------------------------------
# GRU cell
# ---------------------------------------------------------------------------

@dataclass
class GruWeights:
    """Gate weights for one GRU cell: z/r/h gates, input + recurrent + bias."""

    w_z: Tensor
    u_z: Tensor
    b_z: Tensor
    w_r: Tensor
    u_r: Tensor
    b_r: Tensor
    w_h: Tensor
    u_h: Tensor
    b_h: Tensor

    def tensors(self):
        return [self.w_z, self.u_z, self.b_z, self.w_r, self.u_r, self.b_r,
                self.w_h, self.u_h, self.b_h]


def gru_cell(x, h_prev, w: GruWeights):
    """One GRU update: h = (1-z) * h_prev + z * tanh-candidate.

    z and r are sigmoid gates; the candidate sees the reset-scaled state.
    Recorded as a single fused node: recurrent unrolls dominate the tape, so
    the cell carries its own backward instead of ~16 primitive nodes.
    """
    x, h_prev = as_tensor(x), as_tensor(h_prev)
    d_in = w.w_z.data.shape[1]
    d_h = w.u_z.data.shape[1]
    if x.data.shape != (d_in,):
        raise ShapeError(f"gru_cell input has shape {x.data.shape}, weights expect ({d_in},)")
    if h_prev.data.shape != (d_h,):
        raise ShapeError(f"gru_cell state has shape {h_prev.data.shape}, weights expect ({d_h},)")
    xd, hd = x.data, h_prev.data
    z = _sigmoid_raw(w.w_z.data @ xd + w.u_z.data @ hd + w.b_z.data)
    r = _sigmoid_raw(w.w_r.data @ xd + w.u_r.data @ hd + w.b_r.data)
    s = r * hd
    c = np.tanh(w.w_h.data @ xd + w.u_h.data @ s + w.b_h.data)
    out_data = (1.0 - z) * hd + z * c

    def bw(g):
        dac = g * z * (1.0 - c * c)
        daz = g * (c - hd) * z * (1.0 - z)
        ds = w.u_h.data.T @ dac
        dar = ds * hd * r * (1.0 - r)
        if h_prev.requires_grad:
            _accum(h_prev, g * (1.0 - z) + ds * r
                   + w.u_r.data.T @ dar + w.u_z.data.T @ daz)
        if x.requires_grad:
            _accum(x, w.w_h.data.T @ dac + w.w_r.data.T @ dar + w.w_z.data.T @ daz)
        for wt, da, vec in ((w.w_z, daz, xd), (w.u_z, daz, hd),
                            (w.w_r, dar, xd), (w.u_r, dar, hd),
                            (w.w_h, dac, xd), (w.u_h, dac, s)):
            if wt.requires_grad:
                _accum(wt, np.outer(da, vec))
        for bt, da in ((w.b_z, daz), (w.b_r, dar), (w.b_h, dac)):
            if bt.requires_grad:
                _accum(bt, da)

    return _node(out_data, (x, h_prev, *w.tensors()), bw)
