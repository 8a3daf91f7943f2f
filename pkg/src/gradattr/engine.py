"""Tape-based reverse-mode autodiff over a fixed primitive set.

Values are float64 numpy arrays. A Tape records every primitive applied to
its nodes; one backward sweep from a scalar seed yields exact gradients for
every recorded value. The primitive set is the smallest one that covers the
toy CNN, the three score functions, and cross-entropy: dense, 3x3 same-pad
conv, relu, 2x2 maxpool, flatten, (log-)softmax, row/element picks,
elementwise log/exp/add/mul, and sum/mean reductions.

Conventions fixed here because the identities downstream are checked to
tight tolerances:
  * relu's subgradient at exactly 0 is 0;
  * maxpool ties route the gradient to the lowest flat index of the window;
  * the column-pick vjps of softmax/log_softmax share the (onehot - y)
    computation, so the two gradients stay exactly proportional (factor y_c)
    up to one rounding per element even deep into softmax saturation.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

Array = np.ndarray


def as_f64(value) -> Array:
    arr = np.asarray(value, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite values are not representable on a tape")
    return arr


class Node:
    """One value slot on a tape."""

    __slots__ = ("idx", "value", "parents", "name", "needs_grad", "_vjp", "_fwd")

    def __init__(self, idx, value, parents, name, vjp, fwd, needs_grad=True):
        self.idx = idx
        self.value = value
        self.parents = parents
        self.name = name
        self.needs_grad = needs_grad
        self._vjp = vjp
        self._fwd = fwd

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def __repr__(self):
        return f"Node({self.idx}, {self.name}, shape={self.value.shape})"


class Tape:
    """Ordered record of primitive applications; owns its nodes."""

    def __init__(self):
        self.nodes: list[Node] = []

    def leaf(self, value, name: str = "leaf", needs_grad: bool = True) -> Node:
        """Record a leaf. needs_grad=False licenses ops to skip the (possibly
        expensive) gradient into this leaf; backward then omits it."""
        return self._record(as_f64(value), (), name, None, None, needs_grad)

    def _record(self, value: Array, parents: tuple[Node, ...], name: str,
                vjp: Callable | None, fwd: Callable | None,
                needs_grad: bool = True) -> Node:
        node = Node(len(self.nodes), value, parents, name, vjp, fwd, needs_grad)
        self.nodes.append(node)
        return node

    def replay(self) -> None:
        """Re-execute every recorded op in order, overwriting stored values.

        Leaves keep their current values, so replay with untouched leaves
        reproduces the original forward bit-exactly.
        """
        for node in self.nodes:
            if node._fwd is not None:
                node.value = node._fwd(*[p.value for p in node.parents])

    def backward(self, seed: Node) -> dict[Node, Array]:
        """Gradients of the seeded scalar w.r.t. every recorded value.

        Nodes that do not influence the seed get zero gradients.
        """
        if seed.value.shape != ():
            raise ValueError(f"backward seed must be scalar, got shape {seed.value.shape}")
        partial: dict[int, Array] = {seed.idx: np.ones(())}
        for node in reversed(self.nodes):
            g = partial.get(node.idx)
            if g is None or not node.parents:
                continue
            for parent, pg in zip(node.parents, node._vjp(g)):
                if pg is None or not parent.needs_grad:
                    continue
                acc = partial.get(parent.idx)
                partial[parent.idx] = pg if acc is None else acc + pg
        return {n: partial.get(n.idx, np.zeros_like(n.value))
                for n in self.nodes if n.needs_grad}


# ---------------------------------------------------------------------------
# layer primitives


def dense(tape: Tape, x: Node, w: Node, b: Node) -> Node:
    """Affine map on rows: (B, N) @ (N, M) + (M,)."""

    def fwd(xv, wv, bv):
        return xv @ wv + bv

    xv, wv = x.value, w.value

    def vjp(g):
        return g @ wv.T, xv.T @ g, g.sum(axis=0)

    return tape._record(fwd(xv, wv, b.value), (x, w, b), "dense", vjp, fwd)


def _patches3x3(xv: Array) -> Array:
    """im2col: (B, H, W, C) -> (B*H*W, 9*C) patch matrix, offset-major columns."""
    B, H, W, C = xv.shape
    pad = np.pad(xv, ((0, 0), (1, 1), (1, 1), (0, 0)))
    out = np.empty((B, H, W, 9, C))
    for u in range(3):
        for v in range(3):
            out[:, :, :, u * 3 + v, :] = pad[:, u:u + H, v:v + W, :]
    return out.reshape(B * H * W, 9 * C)


def conv2d(tape: Tape, x: Node, w: Node) -> Node:
    """3x3 correlation, stride 1, zero-padded to preserve H and W.

    x: (B, H, W, Cin), w: (Cout, Cin, 3, 3) -> (B, H, W, Cout). No bias term.
    Implemented as im2col + matmul; the input gradient is the full
    correlation of the output gradient with the spatially flipped kernel.
    """
    B, H, W, Ci = x.value.shape
    Co = w.value.shape[0]

    def _wmat(wv):
        # (Co, Ci, 3, 3) -> (9*Ci, Co) rows in the patch-column layout
        return wv.transpose(2, 3, 1, 0).reshape(9 * Ci, Co)

    def fwd(xv, wv):
        return (_patches3x3(xv) @ _wmat(wv)).reshape(B, H, W, Co)

    patches = _patches3x3(x.value)
    wv = w.value
    back = wv[:, :, ::-1, ::-1].transpose(2, 3, 0, 1).reshape(9 * Co, Ci)
    need_dx = x.needs_grad

    def vjp(g):
        gm = g.reshape(B * H * W, Co)
        dw = (patches.T @ gm).reshape(3, 3, Ci, Co).transpose(3, 2, 0, 1)
        if not need_dx:
            return None, dw
        dx = (_patches3x3(g) @ back).reshape(B, H, W, Ci)
        return dx, dw

    return tape._record((patches @ _wmat(wv)).reshape(B, H, W, Co), (x, w), "conv2d", vjp, fwd)


def relu(tape: Tape, x: Node) -> Node:
    def fwd(xv):
        return np.maximum(xv, 0.0)

    mask = x.value > 0.0

    def vjp(g):
        return (g * mask,)

    return tape._record(fwd(x.value), (x,), "relu", vjp, fwd)


def maxpool2(tape: Tape, x: Node) -> Node:
    """2x2 max pooling, stride 2, on (B, H, W, C) with even H and W."""
    B, H, W, C = x.value.shape
    if H % 2 or W % 2:
        raise ValueError(f"maxpool2 needs even spatial dims, got {H}x{W}")

    def windows(xv):
        # last axis enumerates the window in row-major order, so argmax
        # (first max) lands on the lowest flat index on ties
        return (xv.reshape(B, H // 2, 2, W // 2, 2, C)
                .transpose(0, 1, 3, 5, 2, 4)
                .reshape(B, H // 2, W // 2, C, 4))

    def fwd(xv):
        return windows(xv).max(axis=-1)

    win = windows(x.value)
    idx = win.argmax(axis=-1)
    out = np.take_along_axis(win, idx[..., None], axis=-1)[..., 0]

    def vjp(g):
        scat = np.zeros((B, H // 2, W // 2, C, 4))
        np.put_along_axis(scat, idx[..., None], g[..., None], axis=-1)
        dx = (scat.reshape(B, H // 2, W // 2, C, 2, 2)
              .transpose(0, 1, 4, 2, 5, 3)
              .reshape(B, H, W, C))
        return (dx,)

    return tape._record(out, (x,), "maxpool2", vjp, fwd)


def flatten(tape: Tape, x: Node) -> Node:
    shape = x.value.shape
    B = shape[0]

    def fwd(xv):
        return xv.reshape(B, -1)

    def vjp(g):
        return (g.reshape(shape),)

    return tape._record(fwd(x.value), (x,), "flatten", vjp, fwd)


# ---------------------------------------------------------------------------
# softmax family (all act along the last axis)


def _stable_softmax(zv: Array) -> Array:
    shifted = zv - zv.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _stable_log_softmax(zv: Array) -> Array:
    shifted = zv - zv.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax(tape: Tape, z: Node) -> Node:
    y = _stable_softmax(z.value)

    def vjp(g):
        return (y * (g - (g * y).sum(axis=-1, keepdims=True)),)

    return tape._record(y, (z,), "softmax", vjp, _stable_softmax)


def log_softmax(tape: Tape, z: Node) -> Node:
    ls = _stable_log_softmax(z.value)
    y = np.exp(ls)

    def vjp(g):
        return (g - y * g.sum(axis=-1, keepdims=True),)

    return tape._record(ls, (z,), "log_softmax", vjp, _stable_log_softmax)


def _onehot_minus_y(y: Array, col: int) -> Array:
    d = -y.copy()
    d[:, col] += 1.0
    return d


def softmax_col(tape: Tape, z: Node, col: int) -> Node:
    """Per-row softmax probability of one class: (B, n) -> (B,).

    The vjp evaluates y_c * (onehot - y) directly, never the generic
    softmax Jacobian contraction, to avoid cancellation at saturation.
    """
    y = _stable_softmax(z.value)
    d = _onehot_minus_y(y, col)
    yc = y[:, col]

    def fwd(zv):
        return _stable_softmax(zv)[:, col]

    def vjp(g):
        return ((g * yc)[:, None] * d,)

    return tape._record(y[:, col].copy(), (z,), "softmax_col", vjp, fwd)


def log_softmax_col(tape: Tape, z: Node, col: int) -> Node:
    """Per-row log-probability of one class, computed as z_c - logsumexp(z)."""
    y = _stable_softmax(z.value)
    d = _onehot_minus_y(y, col)

    def fwd(zv):
        return _stable_log_softmax(zv)[:, col]

    def vjp(g):
        return (g[:, None] * d,)

    return tape._record(_stable_log_softmax(z.value)[:, col].copy(), (z,), "log_softmax_col", vjp, fwd)


# ---------------------------------------------------------------------------
# selection and reduction


def pick(tape: Tape, x: Node, index: tuple[int, ...]) -> Node:
    """Scalar element of a tensor."""
    index = tuple(index)

    def fwd(xv):
        return np.asarray(xv[index])

    shape = x.value.shape

    def vjp(g):
        dx = np.zeros(shape)
        dx[index] = g
        return (dx,)

    return tape._record(fwd(x.value), (x,), "pick", vjp, fwd)


def take_col(tape: Tape, x: Node, col: int) -> Node:
    """(B, N) -> (B,), one column."""

    def fwd(xv):
        return xv[:, col].copy()

    shape = x.value.shape

    def vjp(g):
        dx = np.zeros(shape)
        dx[:, col] = g
        return (dx,)

    return tape._record(fwd(x.value), (x,), "take_col", vjp, fwd)


def take_per_row(tape: Tape, x: Node, cols: Sequence[int]) -> Node:
    """(B, N) -> (B,), per-row column indices."""
    cols = np.asarray(cols, dtype=np.intp)
    rows = np.arange(x.value.shape[0])

    def fwd(xv):
        return xv[rows, cols].copy()

    shape = x.value.shape

    def vjp(g):
        dx = np.zeros(shape)
        dx[rows, cols] = g
        return (dx,)

    return tape._record(fwd(x.value), (x,), "take_per_row", vjp, fwd)


def sum_all(tape: Tape, x: Node) -> Node:
    shape = x.value.shape

    def fwd(xv):
        return np.asarray(xv.sum())

    def vjp(g):
        return (np.full(shape, g),)

    return tape._record(fwd(x.value), (x,), "sum_all", vjp, fwd)


def mean_all(tape: Tape, x: Node) -> Node:
    shape = x.value.shape
    size = x.value.size

    def fwd(xv):
        return np.asarray(xv.mean())

    def vjp(g):
        return (np.full(shape, g / size),)

    return tape._record(fwd(x.value), (x,), "mean_all", vjp, fwd)


# ---------------------------------------------------------------------------
# elementwise algebra


def elem_log(tape: Tape, x: Node) -> Node:
    xv = x.value

    def vjp(g):
        return (g / xv,)

    return tape._record(np.log(xv), (x,), "log", vjp, np.log)


def elem_exp(tape: Tape, x: Node) -> Node:
    out = np.exp(x.value)

    def vjp(g):
        return (g * out,)

    return tape._record(out, (x,), "exp", vjp, np.exp)


def add(tape: Tape, a: Node, b: Node) -> Node:
    if a.value.shape != b.value.shape:
        raise ValueError("add requires matching shapes")

    def fwd(av, bv):
        return av + bv

    def vjp(g):
        return g, g

    return tape._record(fwd(a.value, b.value), (a, b), "add", vjp, fwd)


def add_rowwise(tape: Tape, a: Node, s: Node) -> Node:
    """Add a per-row scalar (B,) to every column of (B, n)."""

    def fwd(av, sv):
        return av + sv[:, None]

    def vjp(g):
        return g, g.sum(axis=1)

    return tape._record(fwd(a.value, s.value), (a, s), "add_rowwise", vjp, fwd)


def mul(tape: Tape, a: Node, b: Node) -> Node:
    if a.value.shape != b.value.shape:
        raise ValueError("mul requires matching shapes")
    av, bv = a.value, b.value

    def fwd(av_, bv_):
        return av_ * bv_

    def vjp(g):
        return g * bv, g * av

    return tape._record(av * bv, (a, b), "mul", vjp, fwd)


def scale(tape: Tape, x: Node, k: float) -> Node:
    def fwd(xv):
        return xv * k

    def vjp(g):
        return (g * k,)

    return tape._record(fwd(x.value), (x,), "scale", vjp, fwd)


def neg(tape: Tape, x: Node) -> Node:
    return scale(tape, x, -1.0)


# ---------------------------------------------------------------------------
# independent oracle


def finite_diff(f: Callable[[Array], float], x: Array, h: float = 1e-4) -> Array:
    """Central-difference gradient estimate of a scalar function.

    (f(x + h*e_i) - f(x - h*e_i)) / (2h), one coordinate at a time. Kept
    free of any tape machinery so it can vouch for backward().
    """
    if h <= 0:
        raise ValueError("finite_diff needs h > 0")
    x = np.array(x, dtype=np.float64)  # private copy; coordinates get nudged
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = float(f(x))
        flat[i] = orig - h
        fm = float(f(x))
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * h)
    return grad
