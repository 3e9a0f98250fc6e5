"""Minimal reverse-mode automatic differentiation on numpy arrays.

The op vocabulary is deliberately fixed: exactly what the degradation
scorer, the condition network, the modulated generator and their losses
need. There is no general broadcasting (beyond the channel-wise affine),
no graph rewriting, no accelerator backend. Image-like ops accept either
a single sample ``[C,H,W]`` or a batch ``[B,C,H,W]``; vector ops accept
``[N]`` or ``[B,N]``.

Gradients are recorded on an explicit :class:`Tape` and replayed once,
in reverse order, by :meth:`Tape.backward`.
"""

from __future__ import annotations

import os
import threading
from typing import Callable, Sequence

import numpy as np

_FLOAT_DTYPES = (np.dtype(np.float32), np.dtype(np.float64))

_default_dtype = np.dtype(np.float64)
_debug_checks = bool(int(os.environ.get("MODSR_DEBUG", "0")))


def set_default_dtype(dtype) -> None:
    """Select the dtype used for tensors built from plain Python data."""
    global _default_dtype
    dt = np.dtype(dtype)
    if dt not in _FLOAT_DTYPES:
        raise ValueError(f"unsupported dtype {dtype!r}; use float32 or float64")
    _default_dtype = dt


def default_dtype() -> np.dtype:
    return _default_dtype


def set_debug(enabled: bool) -> None:
    """Toggle NaN/Inf checks after every forward op (slow, test aid)."""
    global _debug_checks
    _debug_checks = bool(enabled)


class Tensor:
    """Dense real array with optional gradient storage.

    Instances are treated as immutable once built; the optimizer is the
    only code that rewrites ``.data`` in place, and it does so between
    tapes, never during a forward/backward pass.
    """

    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        if isinstance(data, Tensor):
            raise TypeError("wrap raw arrays, not Tensors")
        if dtype is None and isinstance(data, np.ndarray) and data.dtype in _FLOAT_DTYPES:
            arr = data
        else:
            arr = np.asarray(data, dtype=dtype or _default_dtype)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else _scalar_error(self)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def _scalar_error(t: Tensor):
    raise ValueError(f"expected a scalar tensor, got shape {t.data.shape}")


def as_tensor(x, dtype=None) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x, dtype=dtype)


_tls = threading.local()


def _active_tape() -> "Tape | None":
    return getattr(_tls, "tape", None)


class Tape:
    """Ordered record of differentiable ops for one reverse sweep.

    A tape is confined to the thread that opened it. Entries are stored
    in execution order, which is a valid topological order by
    construction; backward visits each entry exactly once, reversed.
    """

    def __init__(self):
        self._entries: list[tuple[Tensor, tuple[Tensor, ...], Callable]] = []

    def __enter__(self) -> "Tape":
        if _active_tape() is not None:
            raise RuntimeError("a Tape is already active in this thread")
        _tls.tape = self
        return self

    def __exit__(self, *exc) -> None:
        _tls.tape = None

    def __len__(self) -> int:
        return len(self._entries)

    def _record(self, out: Tensor, inputs: tuple[Tensor, ...], backward_fn: Callable) -> None:
        self._entries.append((out, inputs, backward_fn))

    def backward(self, loss: Tensor, params: Sequence[Tensor] | None = None):
        """Accumulate d(loss)/d(leaf) into ``.grad`` of leaf tensors.

        ``loss`` must be scalar. Fan-out accumulates additively. When
        ``params`` is given, returns their gradient arrays in order,
        substituting zeros for parameters the loss never touched.
        """
        if loss.data.size != 1:
            raise ValueError(f"loss must be scalar, got shape {loss.data.shape}")
        produced = {id(out) for out, _, _ in self._entries}
        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        leaf_acc: dict[int, np.ndarray] = {}
        if id(loss) not in produced and loss.requires_grad:
            leaf_acc[id(loss)] = grads[id(loss)]
        for out, inputs, backward_fn in reversed(self._entries):
            g = grads.pop(id(out), None)
            if g is None:
                continue
            for t, ig in zip(inputs, backward_fn(g)):
                if ig is None or not t.requires_grad:
                    continue
                if ig.shape != t.data.shape:
                    raise AssertionError("gradient/value shape mismatch")
                bucket = leaf_acc if id(t) not in produced else grads
                prev = bucket.get(id(t))
                bucket[id(t)] = ig if prev is None else prev + ig
        leaves: dict[int, Tensor] = {}
        for _, inputs, _ in self._entries:
            for t in inputs:
                if t.requires_grad and id(t) not in produced:
                    leaves[id(t)] = t
        for tid, g in leaf_acc.items():
            t = leaves.get(tid, loss if tid == id(loss) else None)
            if t is not None:
                t.grad = g if t.grad is None else t.grad + g
        if params is not None:
            return [leaf_acc.get(id(p), np.zeros_like(p.data)) for p in params]
        return None


def _finish(out_data: np.ndarray, inputs: tuple[Tensor, ...], backward_fn: Callable) -> Tensor:
    """Wrap an op result, recording it when a tape is active."""
    if _debug_checks and not np.all(np.isfinite(out_data)):
        raise FloatingPointError("non-finite value produced by a forward op")
    tape = _active_tape()
    needs = any(t.requires_grad for t in inputs)
    out = Tensor(out_data, requires_grad=needs and tape is not None)
    if out.requires_grad:
        tape._record(out, inputs, backward_fn)
    return out


def detach(x: Tensor) -> Tensor:
    """Same values, severed from the tape (no gradient flows back)."""
    return Tensor(x.data, requires_grad=False)


# ---------------------------------------------------------------------------
# elementwise / reduction ops


def _coerce_pair(a, b) -> tuple[Tensor, Tensor]:
    if not isinstance(a, Tensor):
        a = Tensor(np.asarray(a, dtype=b.dtype))
    if not isinstance(b, Tensor):
        b = Tensor(np.asarray(b, dtype=a.dtype))
    if a.data.shape != b.data.shape and a.data.size != 1 and b.data.size != 1:
        raise ValueError(f"shape mismatch {a.data.shape} vs {b.data.shape}")
    return a, b


def _reduce_to(g: np.ndarray, shape: tuple) -> np.ndarray:
    # only scalar-vs-array mixing can occur; collapse back to the scalar
    if g.shape == shape:
        return g
    return np.asarray(g.sum(), dtype=g.dtype).reshape(shape)


def add(a, b) -> Tensor:
    a, b = _coerce_pair(a, b)
    return _finish(a.data + b.data, (a, b),
                   lambda g: (_reduce_to(g, a.data.shape), _reduce_to(g, b.data.shape)))


def sub(a, b) -> Tensor:
    a, b = _coerce_pair(a, b)
    return _finish(a.data - b.data, (a, b),
                   lambda g: (_reduce_to(g, a.data.shape), _reduce_to(-g, b.data.shape)))


def mul(a, b) -> Tensor:
    a, b = _coerce_pair(a, b)
    return _finish(a.data * b.data, (a, b),
                   lambda g: (_reduce_to(g * b.data, a.data.shape),
                              _reduce_to(g * a.data, b.data.shape)))


def neg(x: Tensor) -> Tensor:
    return _finish(-x.data, (x,), lambda g: (-g,))


def square(x: Tensor) -> Tensor:
    return _finish(x.data * x.data, (x,), lambda g: (2.0 * x.data * g,))


def absolute(x: Tensor) -> Tensor:
    # subgradient 0 at exactly 0
    return _finish(np.abs(x.data), (x,), lambda g: (np.sign(x.data) * g,))


def relu(x: Tensor) -> Tensor:
    """max(x, 0); subgradient 0 at the kink."""
    return _finish(np.maximum(x.data, 0.0), (x,),
                   lambda g: (np.where(x.data > 0.0, g, 0.0),))


def leaky_relu(x: Tensor, slope: float) -> Tensor:
    """Elementwise max(x, slope*x); slope 1 is used at exactly 0."""
    if not 0.0 < slope < 1.0:
        raise ValueError(f"slope must lie in (0,1), got {slope}")
    out = np.maximum(x.data, slope * x.data)
    return _finish(out, (x,),
                   lambda g: (np.where(x.data >= 0.0, g, slope * g),))


def mean(x: Tensor) -> Tensor:
    n = x.data.size
    return _finish(np.asarray(x.data.mean(), dtype=x.dtype), (x,),
                   lambda g: (np.full_like(x.data, float(g) / n),))


def total(x: Tensor) -> Tensor:
    """Sum of all elements (scalar)."""
    return _finish(np.asarray(x.data.sum(), dtype=x.dtype), (x,),
                   lambda g: (np.full_like(x.data, float(g)),))


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    ts = tuple(tensors)
    sizes = [t.data.shape[axis] for t in ts]
    offs = np.cumsum([0] + sizes)

    def bw(g):
        return tuple(np.take(g, range(offs[i], offs[i + 1]), axis=axis)
                     for i in range(len(ts)))

    return _finish(np.concatenate([t.data for t in ts], axis=axis), ts, bw)


def narrow(x: Tensor, axis: int, start: int, length: int) -> Tensor:
    idx = [slice(None)] * x.data.ndim
    idx[axis] = slice(start, start + length)
    idx = tuple(idx)

    def bw(g):
        full = np.zeros_like(x.data)
        full[idx] = g
        return (full,)

    return _finish(x.data[idx].copy(), (x,), bw)


# ---------------------------------------------------------------------------
# network ops


def _as4d(x: np.ndarray) -> tuple[np.ndarray, bool]:
    if x.ndim == 3:
        return x[None], True
    if x.ndim == 4:
        return x, False
    raise ValueError(f"expected [C,H,W] or [B,C,H,W], got shape {x.shape}")


if os.environ.get("MODSR_NO_NUMBA"):
    _JIT = None
else:
    try:
        from modsr import _convkernels as _JIT
    except Exception:  # pragma: no cover - numba not installed
        _JIT = None

# the workqueue threading layer crashes on concurrent entry; serialize
# jit calls (they are a small slice of inference, GEMMs stay concurrent)
_jit_lock = threading.Lock()


def _im2col(x4: np.ndarray, k: int, stride: int, p: int) -> tuple[np.ndarray, int, int]:
    """x4 [B,C,H,W] -> zero-padded columns (C*k*k, B*Ho*Wo)."""
    B, C, H, W = x4.shape
    Ho = (H + 2 * p - k) // stride + 1
    Wo = (W + 2 * p - k) // stride + 1
    if _JIT is not None:
        out = np.empty((C * k * k, B * Ho * Wo), dtype=x4.dtype)
        with _jit_lock:
            _JIT.im2col_nb(np.ascontiguousarray(x4), k, stride, p, out)
        return out, Ho, Wo
    xp = np.pad(x4, ((0, 0), (0, 0), (p, p), (p, p))) if p else x4
    sB, sC, sH, sW = xp.strides
    win = np.lib.stride_tricks.as_strided(
        xp, (C, k, k, B, Ho, Wo), (sC, sH, sW, sB, sH * stride, sW * stride),
        writeable=False)
    return win.reshape(C * k * k, B * Ho * Wo), Ho, Wo


def _col2im(dc: np.ndarray, k: int, stride: int, p: int,
            shape: tuple) -> np.ndarray:
    """Adjoint of _im2col: scatter-add columns back to [B,C,H,W]."""
    B, C, H, W = shape
    dx = np.zeros(shape, dtype=dc.dtype)
    if _JIT is not None:
        with _jit_lock:
            _JIT.col2im_nb(dc, k, stride, p, dx)
        return dx
    Ho = (H + 2 * p - k) // stride + 1
    Wo = (W + 2 * p - k) // stride + 1
    dc6 = dc.reshape(C, k, k, B, Ho, Wo)
    acc = np.zeros((C, B, H + 2 * p, W + 2 * p), dtype=dc.dtype)
    he = (Ho - 1) * stride + 1
    we = (Wo - 1) * stride + 1
    for u in range(k):
        for v in range(k):
            acc[:, :, u:u + he:stride, v:v + we:stride] += dc6[:, u, v]
    return np.ascontiguousarray(
        acc.transpose(1, 0, 2, 3)[:, :, p:p + H, p:p + W])


def conv2d(x: Tensor, weight: Tensor, bias: Tensor, stride: int = 1,
           padding: int = 0) -> Tensor:
    """2D cross-correlation with zero padding.

    x: [C,H,W] or [B,C,H,W]; weight: [O,C,k,k]; bias: [O].
    Output spatial extent is (H + 2*padding - k)/stride + 1, which must
    be integral and >= 1.
    """
    O, C, k, k2 = weight.data.shape
    if k != k2 or k % 2 == 0:
        raise ValueError(f"kernel must be square with odd size, got {k}x{k2}")
    if padding < 0 or stride < 1:
        raise ValueError("padding must be >= 0 and stride >= 1")
    x4, squeeze = _as4d(x.data)
    B, Cin, H, W = x4.shape
    if Cin != C:
        raise ValueError(f"channel mismatch: input {Cin}, weight expects {C}")
    if bias.data.shape != (O,):
        raise ValueError(f"bias must have shape ({O},), got {bias.data.shape}")
    if H < k - 2 * padding or W < k - 2 * padding:
        raise ValueError("input smaller than the kernel's effective extent")
    if (H + 2 * padding - k) % stride or (W + 2 * padding - k) % stride:
        raise ValueError("non-integral output extent")

    p = padding
    cols, Ho, Wo = _im2col(x4, k, stride, p)
    w_mat = weight.data.reshape(O, C * k * k)
    out = (w_mat @ cols + bias.data[:, None]).reshape(O, B, Ho, Wo).transpose(1, 0, 2, 3)

    def bw(g):
        g4 = g if g.ndim == 4 else g[None]
        gm = np.ascontiguousarray(g4.transpose(1, 0, 2, 3)).reshape(O, B * Ho * Wo)
        dw = (gm @ cols.T).reshape(O, C, k, k) if weight.requires_grad else None
        db = gm.sum(axis=1) if bias.requires_grad else None
        dx = None
        if x.requires_grad:
            if C <= O and stride == 1:
                # scatter form: column gradient bytes scale with C, not O
                dx = _col2im(w_mat.T @ gm, k, stride, p, (B, C, H, W))
            else:
                # gather form: correlate the re-dilated output gradient
                # with the flipped, channel-swapped kernel
                if stride > 1:
                    gd = np.zeros((B, O, (Ho - 1) * stride + 1, (Wo - 1) * stride + 1),
                                  dtype=g4.dtype)
                    gd[:, :, ::stride, ::stride] = g4
                else:
                    gd = g4
                gcols, Hp2, Wp2 = _im2col(gd, k, 1, k - 1)
                wf = weight.data[:, :, ::-1, ::-1].transpose(1, 0, 2, 3).reshape(C, O * k * k)
                dxp = (wf @ gcols).reshape(C, B, Hp2, Wp2).transpose(1, 0, 2, 3)
                dx = dxp[:, :, p:p + H, p:p + W]
            if squeeze:
                dx = dx[0]
        return (dx, dw, db)

    return _finish(out[0] if squeeze else out, (x, weight, bias), bw)


def dense(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """Affine map: x [N] or [B,N], weight [M,N], bias [M]."""
    M, N = weight.data.shape
    xd = x.data
    if xd.shape[-1] != N:
        raise ValueError(f"dense expects last dim {N}, got {xd.shape}")
    if bias.data.shape != (M,):
        raise ValueError(f"bias must have shape ({M},), got {bias.data.shape}")
    out = xd @ weight.data.T + bias.data

    def bw(g):
        g2 = g.reshape(-1, M)
        x2 = xd.reshape(-1, N)
        dw = g2.T @ x2 if weight.requires_grad else None
        db = g2.sum(axis=0) if bias.requires_grad else None
        dx = (g @ weight.data) if x.requires_grad else None
        return (dx, dw, db)

    return _finish(out, (x, weight, bias), bw)


def global_avg_pool(x: Tensor) -> Tensor:
    """Per-channel spatial mean: [C,H,W] -> [C] or [B,C,H,W] -> [B,C]."""
    x4, squeeze = _as4d(x.data)
    B, C, H, W = x4.shape
    out = x4.mean(axis=(2, 3))

    def bw(g):
        g2 = g.reshape(B, C)
        dx = np.broadcast_to((g2 / (H * W))[:, :, None, None], x4.shape).copy()
        return (dx[0] if squeeze else dx,)

    return _finish(out[0] if squeeze else out, (x,), bw)


def _shuffle(x4: np.ndarray, r: int) -> np.ndarray:
    B, Cr, H, W = x4.shape
    C = Cr // (r * r)
    return (x4.reshape(B, C, r, r, H, W).transpose(0, 1, 4, 2, 5, 3)
            .reshape(B, C, H * r, W * r))


def _unshuffle(y4: np.ndarray, r: int) -> np.ndarray:
    B, C, Hr, Wr = y4.shape
    H, W = Hr // r, Wr // r
    return (y4.reshape(B, C, H, r, W, r).transpose(0, 1, 3, 5, 2, 4)
            .reshape(B, C * r * r, H, W))


def pixel_shuffle(x: Tensor, r: int) -> Tensor:
    """Rearrange [C*r^2,H,W] -> [C,rH,rW]; an exact bijection of elements."""
    if r < 1:
        raise ValueError("upscale factor must be >= 1")
    x4, squeeze = _as4d(x.data)
    if x4.shape[1] % (r * r):
        raise ValueError(f"channels {x4.shape[1]} not divisible by r^2={r * r}")
    out = _shuffle(x4, r)

    def bw(g):
        g4 = g if g.ndim == 4 else g[None]
        dx = _unshuffle(g4, r)
        return (dx[0] if squeeze else dx,)

    return _finish(out[0] if squeeze else out, (x,), bw)


def broadcast_affine(f: Tensor, alpha: Tensor, beta: Tensor) -> Tensor:
    """Channel-wise scale-and-shift: out[c] = f[c]*alpha[c] + beta[c].

    f: [C,H,W] or [B,C,H,W]; alpha/beta: [C] or, for batched f, [B,C].
    """
    f4, squeeze = _as4d(f.data)
    B, C, H, W = f4.shape
    if alpha.data.shape != beta.data.shape:
        raise ValueError("alpha and beta must share a shape")
    if alpha.data.shape not in ((C,), (B, C)):
        raise ValueError(f"alpha/beta must be [{C}] or [{B},{C}], got {alpha.data.shape}")
    a4 = alpha.data.reshape(-1, C)[:, :, None, None]
    b4 = beta.data.reshape(-1, C)[:, :, None, None]
    out = f4 * a4 + b4

    def bw(g):
        g4 = g if g.ndim == 4 else g[None]
        df = (g4 * a4) if f.requires_grad else None
        if df is not None and squeeze:
            df = df[0]
        da = db = None
        if alpha.requires_grad:
            da = (g4 * f4).sum(axis=(2, 3))
            da = da.reshape(alpha.data.shape) if alpha.data.ndim == 2 else da.sum(axis=0)
        if beta.requires_grad:
            db = g4.sum(axis=(2, 3))
            db = db.reshape(beta.data.shape) if beta.data.ndim == 2 else db.sum(axis=0)
        return (df, da, db)

    return _finish(out[0] if squeeze else out, (f, alpha, beta), bw)


# ---------------------------------------------------------------------------
# optimizer


def adam_init(params: Sequence[Tensor]) -> dict:
    return {
        "step": 0,
        "m": [np.zeros_like(p.data) for p in params],
        "v": [np.zeros_like(p.data) for p in params],
    }


def adam_step(params: Sequence[Tensor], grads: Sequence[np.ndarray], state: dict | None,
              lr: float, beta1: float = 0.9, beta2: float = 0.99,
              eps: float = 1e-8) -> dict:
    """One bias-corrected Adam update, in place on ``params``.

    Pass ``state=None`` on the first call; the returned dict carries the
    running moments and step counter for subsequent calls.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if state is None:
        state = adam_init(params)
    state["step"] += 1
    t = state["step"]
    bc1 = 1.0 - beta1 ** t
    bc2 = 1.0 - beta2 ** t
    for p, g, m, v in zip(params, grads, state["m"], state["v"]):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p.data = p.data - lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
    return state
