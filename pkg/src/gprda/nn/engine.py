"""Reverse-mode automatic differentiation over numpy arrays.

A Tensor wraps a float64 ndarray together with an accumulated gradient and a
backward closure; ``Tensor.backward()`` walks the recorded graph once in
reverse topological order. Only the operations the 1D conv model families
need are provided: valid/padded 1D cross-correlation, fully connected,
leaky rectifier, flatten, endpoint-aligned linear upsampling, per-channel
summation fusion, gradient reversal, and the two losses.

Shape conventions: conv inputs are (batch, channels, length); linear inputs
are (batch, features); losses return 0-d tensors.
"""

from __future__ import annotations

import numpy as np

from gprda.errors import ShapeError

DOMAIN_SOURCE = 0
DOMAIN_TARGET = 1


def _tune_allocator():
    # glibc mmaps and immediately unmaps the multi-MB temporaries these
    # training graphs churn through, so every iteration pays page faults;
    # raising the mmap/trim thresholds lets the heap recycle warm pages
    # (measured ~40% on the reconstruction variants)
    try:
        import ctypes

        libc = ctypes.CDLL("libc.so.6")
        libc.mallopt(-3, 1 << 30)  # M_MMAP_THRESHOLD
        libc.mallopt(-1, 1 << 30)  # M_TRIM_THRESHOLD
    except Exception:
        pass


_tune_allocator()

try:  # the installed BLAS handles small-inner-dimension f64 GEMMs poorly
    import numba

    @numba.njit(cache=True, fastmath=True)
    def _outer_accumulate(at, bmat, out):
        # out[o, i] = sum_b at[o, b] * bmat[b, i]
        p, n = at.shape
        q = bmat.shape[1]
        for o in range(p):
            for i in range(q):
                out[o, i] = at[o, 0] * bmat[0, i]
            for b in range(1, n):
                aob = at[o, b]
                for i in range(q):
                    out[o, i] += aob * bmat[b, i]

except ImportError:  # pragma: no cover
    _outer_accumulate = None


def _contract_atb(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """a.T @ b for a (n, p), b (n, q), routed around the slow BLAS path."""
    n, p = a.shape
    q = b.shape[1]
    if _outer_accumulate is not None and n <= 64 and p * q >= 1 << 20:
        out = np.empty((p, q))
        _outer_accumulate(np.ascontiguousarray(a.T), np.ascontiguousarray(b), out)
        return out
    return a.T @ b


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, _parents=(), _backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in _parents)
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self):
        return self.data.shape

    def _accumulate(self, g, own: bool = False):
        """Add g into the gradient buffer.

        own=True asserts g was freshly allocated for this tensor, letting
        the first accumulation adopt it without a defensive copy; shared or
        pass-through arrays must use own=False.
        """
        if self.grad is None:
            self.grad = g if own else np.array(g, dtype=np.float64)
        else:
            self.grad += g

    def backward(self):
        """Backpropagate from a scalar tensor through the recorded graph."""
        if self.data.size != 1:
            raise ShapeError("backward() requires a scalar tensor")
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in visited:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.requires_grad and node.grad is not None:
                node._backward(node.grad)

    def detach(self) -> "Tensor":
        """Same data, cut off from the graph (no gradient flows back)."""
        return Tensor(self.data)

    def __add__(self, other):
        if isinstance(other, Tensor):
            return add(self, other)
        return shift(self, float(other))

    __radd__ = __add__

    def __mul__(self, scalar):
        return scale(self, float(scalar))

    __rmul__ = __mul__

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise ShapeError(f"add: shapes {a.data.shape} and {b.data.shape} differ")

    def bk(g):
        if a.requires_grad:
            a._accumulate(g)
        if b.requires_grad:
            b._accumulate(g)

    return Tensor(a.data + b.data, _parents=(a, b), _backward=bk)


def shift(x: Tensor, c: float) -> Tensor:
    def bk(g):
        if x.requires_grad:
            x._accumulate(g)

    return Tensor(x.data + c, _parents=(x,), _backward=bk)


def scale(x: Tensor, s: float) -> Tensor:
    def bk(g):
        if x.requires_grad:
            x._accumulate(g * s, own=True)

    return Tensor(x.data * s, _parents=(x,), _backward=bk)


def leaky_relu(x: Tensor, slope: float = 0.01) -> Tensor:
    mask = x.data >= 0

    def bk(g):
        if x.requires_grad:
            x._accumulate(g * np.where(mask, 1.0, slope), own=True)

    return Tensor(np.where(mask, x.data, slope * x.data), _parents=(x,), _backward=bk)


def conv1d(x: Tensor, w: Tensor, b: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """Batched 1D cross-correlation.

    x: (B, C_in, L), w: (C_out, C_in, K), b: (C_out,). Output length is
    floor((L + 2*padding - K) / stride) + 1; padding zero-fills both ends.
    """
    B, C_in, L = x.data.shape
    C_out, C_w, K = w.data.shape
    if C_w != C_in:
        raise ShapeError(f"conv1d: input has {C_in} channels, kernel expects {C_w}")
    Lp = L + 2 * padding
    if Lp < K:
        raise ShapeError(f"conv1d: padded length {Lp} shorter than kernel {K}")
    F = (Lp - K) // stride + 1

    xp = x.data if padding == 0 else np.pad(x.data, ((0, 0), (0, 0), (padding, padding)))
    xp = np.ascontiguousarray(xp)
    s0, s1, s2 = xp.strides
    cols = np.lib.stride_tricks.as_strided(
        xp, shape=(B, C_in, F, K), strides=(s0, s1, stride * s2, s2)
    )
    out = np.tensordot(cols, w.data, axes=([1, 3], [1, 2]))  # (B, F, C_out)
    out = np.ascontiguousarray(out.transpose(0, 2, 1)) + b.data[None, :, None]

    def bk(g):
        # g: (B, C_out, F)
        if w.requires_grad:
            g2 = g.transpose(0, 2, 1).reshape(B * F, C_out)
            c2 = cols.transpose(0, 2, 1, 3).reshape(B * F, C_in * K)
            w._accumulate(_contract_atb(g2, c2).reshape(C_out, C_in, K), own=True)
        if b.requires_grad:
            b._accumulate(g.sum(axis=(0, 2)), own=True)
        if x.requires_grad:
            dxp = np.zeros_like(xp)
            # one GEMM for all taps, then scatter tap k onto positions k + stride*f
            dcols = np.tensordot(g, w.data, axes=([1], [0]))  # (B, F, C_in, K)
            dcolsT = dcols.transpose(0, 2, 1, 3)  # (B, C_in, F, K)
            for k in range(K):
                dxp[:, :, k : k + stride * F : stride] += dcolsT[:, :, :, k]
            x._accumulate(dxp[:, :, padding : padding + L] if padding else dxp, own=True)

    return Tensor(out, _parents=(x, w, b), _backward=bk)


def linear(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """Fully connected layer: x (B, F_in) @ w (F_out, F_in)^T + b (F_out,)."""
    if x.data.shape[1] != w.data.shape[1]:
        raise ShapeError(f"linear: input {x.data.shape} incompatible with weight {w.data.shape}")
    out = x.data @ w.data.T + b.data

    def bk(g):
        if w.requires_grad:
            w._accumulate(g.T @ x.data, own=True)
        if b.requires_grad:
            b._accumulate(g.sum(axis=0), own=True)
        if x.requires_grad:
            x._accumulate(g @ w.data, own=True)

    return Tensor(out, _parents=(x, w, b), _backward=bk)


def flatten(x: Tensor) -> Tensor:
    B = x.data.shape[0]
    shape_in = x.data.shape

    def bk(g):
        if x.requires_grad:
            x._accumulate(g.reshape(shape_in))

    return Tensor(x.data.reshape(B, -1), _parents=(x,), _backward=bk)


def upsample_linear(x: Tensor, length_out: int) -> Tensor:
    """Endpoint-aligned linear interpolation along the last axis.

    Output position j maps to input position j*(L_in-1)/(L_out-1), so the
    first and last samples are preserved exactly. A length-1 input is
    broadcast as a constant.
    """
    B, C, L_in = x.data.shape
    if length_out < 1:
        raise ShapeError("upsample_linear: output length must be positive")
    if L_in == 1:
        out = np.repeat(x.data, length_out, axis=2)

        def bk1(g):
            if x.requires_grad:
                x._accumulate(g.sum(axis=2, keepdims=True), own=True)

        return Tensor(out, _parents=(x,), _backward=bk1)

    if length_out == 1:
        pos = np.zeros(1)
    else:
        pos = np.arange(length_out) * ((L_in - 1) / (length_out - 1))
    i0 = np.minimum(pos.astype(np.int64), L_in - 2)
    frac = pos - i0
    out = x.data[:, :, i0] * (1.0 - frac) + x.data[:, :, i0 + 1] * frac

    def bk(g):
        if x.requires_grad:
            dx = np.zeros((L_in, B * C))
            g2 = g.reshape(B * C, length_out).T  # (L_out, B*C)
            np.add.at(dx, i0, g2 * (1.0 - frac)[:, None])
            np.add.at(dx, i0 + 1, g2 * frac[:, None])
            x._accumulate(dx.T.reshape(B, C, L_in).copy(), own=True)

    return Tensor(out, _parents=(x,), _backward=bk)


def sum_fuse(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum; a (B, C, L) fused with b (B, C) broadcasts per channel."""
    if a.data.shape == b.data.shape:
        return add(a, b)
    if a.data.ndim == 3 and b.data.ndim == 2 and a.data.shape[:2] == b.data.shape:
        def bk(g):
            if a.requires_grad:
                a._accumulate(g)
            if b.requires_grad:
                b._accumulate(g.sum(axis=2), own=True)

        return Tensor(a.data + b.data[:, :, None], _parents=(a, b), _backward=bk)
    raise ShapeError(f"sum_fuse: cannot fuse shapes {a.data.shape} and {b.data.shape}")


def gradient_reversal(x: Tensor, lam: float) -> Tensor:
    """Identity in the forward pass; backward multiplies the gradient by -lam."""
    if lam < 0:
        raise ShapeError("gradient_reversal: lam must be non-negative")

    def bk(g):
        if x.requires_grad:
            x._accumulate(-lam * g, own=True)

    return Tensor(x.data, _parents=(x,), _backward=bk)


def mse_loss(pred: Tensor, target) -> Tensor:
    t = target.data if isinstance(target, Tensor) else np.asarray(target, dtype=np.float64)
    if pred.data.shape != t.shape:
        raise ShapeError(f"mse_loss: shapes {pred.data.shape} and {t.shape} differ")
    if pred.data.size == 0:
        raise ShapeError("mse_loss: empty input")
    diff = pred.data - t

    def bk(g):
        if pred.requires_grad:
            pred._accumulate(g * 2.0 * diff / diff.size, own=True)

    return Tensor(np.mean(diff * diff), _parents=(pred,), _backward=bk)


def domain_loss(logits: Tensor, domain: int) -> Tensor:
    """Two-class softmax cross-entropy against a single domain label.

    logits: (B, 2); domain: 0 for source, 1 for target. Returns the batch
    mean negative log-probability of the given domain.
    """
    z = logits.data
    if z.ndim != 2 or z.shape[1] != 2:
        raise ShapeError(f"domain_loss: expected (B, 2) logits, got {z.shape}")
    zmax = z.max(axis=1, keepdims=True)
    ez = np.exp(z - zmax)
    probs = ez / ez.sum(axis=1, keepdims=True)
    logp = (z - zmax) - np.log(ez.sum(axis=1, keepdims=True))
    B = z.shape[0]

    def bk(g):
        if logits.requires_grad:
            d = probs.copy()
            d[:, domain] -= 1.0
            logits._accumulate(g * d / B, own=True)

    return Tensor(-np.mean(logp[:, domain]), _parents=(logits,), _backward=bk)
