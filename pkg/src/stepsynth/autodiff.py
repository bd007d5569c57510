"""Reverse-mode automatic differentiation over dense numpy tensors.

Covers exactly the layer set the engine's networks need: elementwise ops,
matmul, GRU cell, activations, reductions, framing, FFT magnitude, and the
synthesizer-specific linear transforms (zero-phase inverse real DFT,
batched convolution, overlap-add scatter).  Storage defaults to float32
with 64-bit accumulation in reductions; build tensors as float64 for tight
finite-difference checks.

Ops run with or without an active Tape: outside a ``with Tape() as t:``
block (or when no input requires grad) they are plain numpy forward
computations, so inference shares the training code path.
"""

from __future__ import annotations

import numpy as np
from dataclasses import dataclass, field

from .errors import ContractViolation

DEFAULT_DTYPE = np.float32

_active_tape = None


class Tensor:
    __slots__ = ("data", "grad", "requires_grad")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data)
        if dtype is None:
            dtype = arr.dtype if arr.dtype in (np.float32, np.float64) else DEFAULT_DTYPE
        self.data = np.ascontiguousarray(arr, dtype=dtype)
        self.grad = None
        self.requires_grad = bool(requires_grad)

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype.name}, requires_grad={self.requires_grad})"


def tensor(data, requires_grad: bool = False, dtype=None) -> Tensor:
    return Tensor(data, requires_grad=requires_grad, dtype=dtype)


class _Node:
    __slots__ = ("out", "parents", "backward_fn")

    def __init__(self, out, parents, backward_fn):
        self.out = out
        self.parents = parents
        self.backward_fn = backward_fn


class Tape:
    """Ordered record of primitive ops; context manager activates it."""

    def __init__(self):
        self.nodes: list[_Node] = []
        self._tracked: set[int] = set()

    def __enter__(self):
        global _active_tape
        if _active_tape is not None:
            raise ContractViolation("tapes do not nest")
        _active_tape = self
        return self

    def __exit__(self, *exc):
        global _active_tape
        _active_tape = None
        return False

    def _tracks(self, t) -> bool:
        return isinstance(t, Tensor) and (t.requires_grad or id(t) in self._tracked)

    def record(self, out: Tensor, parents, backward_fn) -> None:
        self.nodes.append(_Node(out, parents, backward_fn))
        self._tracked.add(id(out))


def _record(out: Tensor, parents, backward_fn) -> Tensor:
    tape = _active_tape
    if tape is not None and any(tape._tracks(p) for p in parents):
        tape.record(out, parents, backward_fn)
    return out


def _as_array(x):
    if isinstance(x, Tensor):
        return x.data
    if isinstance(x, (int, float)):
        return x  # python scalars promote weakly, keeping float32 storage
    return np.asarray(x)


def _shape_of(x) -> tuple:
    return getattr(x, "shape", ())


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum grad down to `shape` (inverse of numpy broadcasting)."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0, dtype=np.float64).astype(grad.dtype)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True, dtype=np.float64).astype(grad.dtype)
    return grad.reshape(shape)


def backward(tape: Tape, loss: Tensor) -> None:
    """Populate .grad on every requires_grad tensor reachable from loss.

    Unreached parameters that appear on the tape get zero gradients.
    Traversal is the exact reverse of recording order, so repeated runs on
    one tape are bit-identical.
    """
    if not isinstance(loss, Tensor) or loss.data.size != 1:
        raise ContractViolation("loss must be a scalar Tensor")
    grads: dict[int, np.ndarray] = {
        id(loss): np.ones_like(loss.data)
    }
    leaves: list[Tensor] = []
    seen_leaves: set[int] = set()
    for node in tape.nodes:
        for p in node.parents:
            if isinstance(p, Tensor) and p.requires_grad and id(p) not in seen_leaves:
                seen_leaves.add(id(p))
                leaves.append(p)
    for node in reversed(tape.nodes):
        g = grads.pop(id(node.out), None)
        if g is None:
            continue
        parent_grads = node.backward_fn(g)
        for p, pg in zip(node.parents, parent_grads):
            if pg is None or not isinstance(p, Tensor):
                continue
            if not (p.requires_grad or id(p) in tape._tracked):
                continue
            key = id(p)
            if key in grads:
                grads[key] = grads[key] + pg
            else:
                grads[key] = pg
    for leaf in leaves:
        g = grads.get(id(leaf))
        if g is None:
            g = np.zeros_like(leaf.data)
        leaf.grad = g if leaf.grad is None else leaf.grad + g


# ---------------------------------------------------------------------------
# elementwise / linear algebra primitives
# ---------------------------------------------------------------------------

def add(a, b) -> Tensor:
    av, bv = _as_array(a), _as_array(b)
    out = Tensor(av + bv)
    ash, bsh = _shape_of(av), _shape_of(bv)
    return _record(out, (a, b), lambda g: (_unbroadcast(g, ash), _unbroadcast(g, bsh)))


def sub(a, b) -> Tensor:
    av, bv = _as_array(a), _as_array(b)
    out = Tensor(av - bv)
    ash, bsh = _shape_of(av), _shape_of(bv)
    return _record(out, (a, b), lambda g: (_unbroadcast(g, ash), _unbroadcast(-g, bsh)))


def mul(a, b) -> Tensor:
    av, bv = _as_array(a), _as_array(b)
    out = Tensor(av * bv)
    ash, bsh = _shape_of(av), _shape_of(bv)
    return _record(out, (a, b),
                   lambda g: (_unbroadcast(g * bv, ash), _unbroadcast(g * av, bsh)))


def neg(a) -> Tensor:
    out = Tensor(-_as_array(a))
    return _record(out, (a,), lambda g: (-g,))


def matmul(a, b) -> Tensor:
    av, bv = _as_array(a), _as_array(b)
    if av.ndim != 2 or bv.ndim != 2:
        raise ContractViolation("matmul expects 2-D operands")
    out = Tensor(av @ bv)

    def bwd(g):
        return (g @ bv.T, av.T @ g)

    return _record(out, (a, b), bwd)


def _open_unit(y: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Clamp saturated float rounding back inside the open interval."""
    dt = y.dtype.type
    return np.clip(y, np.nextafter(dt(lo), dt(hi)), np.nextafter(dt(hi), dt(lo)))


def tanh(a) -> Tensor:
    y = _open_unit(np.tanh(_as_array(a)), -1.0, 1.0)
    out = Tensor(y)
    return _record(out, (a,), lambda g: (g * (1.0 - y * y),))


def sigmoid(a) -> Tensor:
    av = _as_array(a)
    y = 0.5 * (np.tanh(0.5 * av.astype(np.float64)) + 1.0)
    y = _open_unit(y.astype(av.dtype), 0.0, 1.0)
    out = Tensor(y)
    return _record(out, (a,), lambda g: (g * y * (1.0 - y),))


def softplus(a) -> Tensor:
    av = _as_array(a)
    x64 = av.astype(np.float64)
    y = np.logaddexp(0.0, x64)
    sig = 0.5 * (np.tanh(0.5 * x64) + 1.0)
    out = Tensor(y.astype(av.dtype))
    sig = sig.astype(av.dtype)
    return _record(out, (a,), lambda g: (g * sig,))


def absolute(a) -> Tensor:
    av = _as_array(a)
    s = np.sign(av)
    out = Tensor(np.abs(av))
    return _record(out, (a,), lambda g: (g * s,))


def log(a) -> Tensor:
    av = _as_array(a)
    out = Tensor(np.log(av))
    return _record(out, (a,), lambda g: (g / av,))


def maximum_const(a, floor: float) -> Tensor:
    """max(a, floor); zero subgradient where a <= floor."""
    av = _as_array(a)
    mask = av > floor
    out = Tensor(np.maximum(av, floor))
    return _record(out, (a,), lambda g: (g * mask,))


def tsum(a, axis=None, keepdims: bool = False) -> Tensor:
    av = _as_array(a)
    out64 = np.sum(av, axis=axis, keepdims=keepdims, dtype=np.float64)
    out = Tensor(np.asarray(out64).astype(av.dtype))
    ash = av.shape

    def bwd(g):
        gg = g
        if axis is not None and not keepdims:
            gg = np.expand_dims(g, axis)
        return (np.broadcast_to(gg, ash).astype(av.dtype, copy=True),)

    return _record(out, (a,), bwd)


def mean(a, axis=None, keepdims: bool = False) -> Tensor:
    av = _as_array(a)
    if axis is None:
        count = av.size
    else:
        count = av.shape[axis] if isinstance(axis, int) else int(np.prod([av.shape[i] for i in axis]))
    s = tsum(a, axis=axis, keepdims=keepdims)
    return mul(s, 1.0 / count)


def reshape(a, shape) -> Tensor:
    av = _as_array(a)
    out = Tensor(av.reshape(shape))
    orig = av.shape
    return _record(out, (a,), lambda g: (g.reshape(orig),))


def transpose(a, axes) -> Tensor:
    av = _as_array(a)
    out = Tensor(np.ascontiguousarray(av.transpose(axes)))
    inverse = np.argsort(axes)
    return _record(out, (a,), lambda g: (np.ascontiguousarray(g.transpose(inverse)),))


def _is_basic_index(index) -> bool:
    parts = index if isinstance(index, tuple) else (index,)
    return all(isinstance(p, (slice, int)) or p is Ellipsis for p in parts)


def getitem(a, index) -> Tensor:
    """Basic slicing or integer-array gather; backward scatter-adds."""
    av = _as_array(a)
    out = Tensor(av[index].copy())
    ash, adt = av.shape, av.dtype
    basic = _is_basic_index(index)  # no duplicate targets, += is safe

    def bwd(g):
        full = np.zeros(ash, dtype=adt)
        if basic:
            full[index] += g
        else:
            np.add.at(full, index, g)
        return (full,)

    return _record(out, (a,), bwd)


def concat(parts, axis: int = 0) -> Tensor:
    arrs = [_as_array(p) for p in parts]
    out = Tensor(np.concatenate(arrs, axis=axis))
    sizes = [arr.shape[axis] for arr in arrs]
    splits = np.cumsum(sizes)[:-1]

    def bwd(g):
        return tuple(np.split(g, splits, axis=axis))

    return _record(out, tuple(parts), bwd)


def stack(parts, axis: int = 0) -> Tensor:
    arrs = [_as_array(p) for p in parts]
    out = Tensor(np.stack(arrs, axis=axis))

    def bwd(g):
        return tuple(np.moveaxis(g, axis, 0))

    return _record(out, tuple(parts), bwd)


# ---------------------------------------------------------------------------
# framing / spectral primitives
# ---------------------------------------------------------------------------

def _fold_frames(grad_frames: np.ndarray, hop: int, out_len: int) -> np.ndarray:
    """Overlap-add of (..., n_frames, flen) gradient frames; adjoint of framing."""
    *lead, n_frames, flen = grad_frames.shape
    out = np.zeros((*lead, out_len), dtype=grad_frames.dtype)
    if flen % hop == 0:
        phases = flen // hop
        for j in range(phases):
            sel = grad_frames[..., j::phases, :]
            m = sel.shape[-2]
            if m == 0:
                continue
            flat = sel.reshape(*lead, m * flen)
            start = j * hop
            stop = min(start + m * flen, out_len)
            out[..., start:stop] += flat[..., : stop - start]
    else:
        for i in range(n_frames):
            start = i * hop
            stop = min(start + flen, out_len)
            out[..., start:stop] += grad_frames[..., i, : stop - start]
    return out


def frame(a, frame_length: int, hop: int) -> Tensor:
    """Slice (..., L) into (..., n_frames, frame_length) with zero-padded tail."""
    from .dsp import frame_signal  # local import to avoid a cycle

    av = _as_array(a)
    framed = frame_signal(av, frame_length, hop).astype(av.dtype)
    out = Tensor(framed)
    length = av.shape[-1]

    def bwd(g):
        full = _fold_frames(g, hop, max(length, (framed.shape[-2] - 1) * hop + frame_length))
        return (full[..., :length],)

    return _record(out, (a,), bwd)


def fft_magnitude(a) -> Tensor:
    """Full-spectrum |FFT| along the last axis (power-of-two frames).

    Backward propagates Re(conj(X_k)/|X_k| * dX_k/dx); bins with magnitude
    <= 1e-12 contribute zero (subgradient at silence).
    """
    av = _as_array(a)
    n = av.shape[-1]
    if n & (n - 1) != 0:
        raise ContractViolation("frame length must be a power of two")
    spec_half = np.fft.rfft(av, axis=-1)
    mags_half = np.abs(spec_half)
    mirror = slice(n // 2 - 1, 0, -1)
    mags = np.concatenate([mags_half, mags_half[..., mirror]], axis=-1)
    out = Tensor(mags)

    def bwd(g):
        # mirrored bins share basis functions, so fold their grads onto
        # the half spectrum and reduce to one inverse real transform
        g_eff = g[..., : n // 2 + 1].copy()
        g_eff[..., 1:-1] += g[..., : n // 2 : -1]
        g_eff /= np.where(mags_half > 1e-12, mags_half, np.inf)
        g_eff[..., 0] *= 2.0
        g_eff[..., -1] *= 2.0
        c = spec_half.conj()
        c *= g_eff
        grad = 0.5 * n * np.fft.irfft(np.conj(c), n=n, axis=-1)
        return (grad.astype(av.dtype),)

    return _record(out, (a,), bwd)


def irfft_real(a, n: int) -> Tensor:
    """Inverse real FFT of a zero-phase (real) half spectrum: (..., n//2+1) -> (..., n)."""
    av = _as_array(a)
    if av.shape[-1] != n // 2 + 1:
        raise ContractViolation("half spectrum must have n//2 + 1 bins")
    out = Tensor(np.fft.irfft(av.astype(np.float64), n=n, axis=-1).astype(av.dtype))

    def bwd(g):
        spec = np.fft.rfft(g.astype(np.float64), axis=-1)
        grad = np.real(spec) / n
        grad[..., 1:-1] *= 2.0
        return (grad.astype(av.dtype),)

    return _record(out, (a,), bwd)


def flip_last(a) -> Tensor:
    av = _as_array(a)
    out = Tensor(av[..., ::-1].copy())
    return _record(out, (a,), lambda g: (g[..., ::-1].copy(),))


def batch_conv_full(noise: np.ndarray, b) -> Tensor:
    """Full convolution of constant rows `noise` (..., M) with tensor rows b (..., L).

    Linear in b; gradient is the row-wise correlation of the output grad
    with the noise.  Used for per-frame FIR filtering of synthesis noise.
    """
    bv = _as_array(b)
    noise = np.asarray(noise, dtype=np.float64)
    m, l = noise.shape[-1], bv.shape[-1]
    n_fft = 1
    while n_fft < m + l - 1:
        n_fft *= 2
    nf = np.fft.rfft(noise, n=n_fft, axis=-1)
    y = np.fft.irfft(nf * np.fft.rfft(bv.astype(np.float64), n=n_fft, axis=-1),
                     n=n_fft, axis=-1)[..., : m + l - 1]
    out = Tensor(y.astype(bv.dtype))

    def bwd(g):
        # grad_b[k] = sum_t g[t] * noise[t - k]  (correlation)
        gf = np.fft.rfft(g.astype(np.float64), n=n_fft, axis=-1)
        corr = np.fft.irfft(gf * np.conj(nf), n=n_fft, axis=-1)
        return (None, corr[..., :l].astype(bv.dtype))

    return _record(out, (noise, b), bwd)


def ola_scatter(a, hop: int, offset: int, out_len: int) -> Tensor:
    """Overlap-add (..., n_frames, M) rows at start positions k*hop + offset.

    Contributions falling outside [0, out_len) are dropped.  Backward
    gathers the corresponding windows back out of the gradient signal.
    """
    av = _as_array(a)
    *lead, n_frames, m = av.shape
    out_arr = np.zeros((*lead, out_len), dtype=av.dtype)
    spans = []
    for k in range(n_frames):
        start = k * hop + offset
        lo = max(start, 0)
        hi = min(start + m, out_len)
        spans.append((lo, hi, lo - start))
        if hi > lo:
            out_arr[..., lo:hi] += av[..., k, lo - start : hi - start]
    out = Tensor(out_arr)

    def bwd(g):
        grad = np.zeros_like(av)
        for k, (lo, hi, inner) in enumerate(spans):
            if hi > lo:
                grad[..., k, inner : inner + hi - lo] = g[..., lo:hi]
        return (grad,)

    return _record(out, (a,), bwd)


# ---------------------------------------------------------------------------
# GRU cell
# ---------------------------------------------------------------------------

@dataclass
class GRUParams:
    """Gate parameters; update/reset/candidate as w (input), u (hidden), b."""

    w_z: Tensor
    u_z: Tensor
    b_z: Tensor
    w_r: Tensor
    u_r: Tensor
    b_r: Tensor
    w_h: Tensor
    u_h: Tensor
    b_h: Tensor

    def tensors(self) -> dict:
        return {name: getattr(self, name) for name in
                ("w_z", "u_z", "b_z", "w_r", "u_r", "b_r", "w_h", "u_h", "b_h")}


def gru_cell(x, h, params: GRUParams) -> Tensor:
    """One GRU step.

    z = sigm(W_z x + U_z h + b_z); r = sigm(W_r x + U_r h + b_r);
    cand = tanh(W_h x + U_h (r * h) + b_h); h' = (1 - z) * h + z * cand.
    The reset gate multiplies the hidden state BEFORE the U_h projection.
    """
    xv, hv = _as_array(x), _as_array(h)
    if xv.shape[-1] != params.w_z.shape[0] or hv.shape[-1] != params.u_z.shape[0]:
        raise ContractViolation("gru_cell dimension mismatch")
    xz = add(matmul(x, params.w_z), params.b_z)
    xr = add(matmul(x, params.w_r), params.b_r)
    xh = add(matmul(x, params.w_h), params.b_h)
    return gru_cell_pre(xz, xr, xh, h, params)


def gru_cell_pre(xz, xr, xh, h, params: GRUParams) -> Tensor:
    """GRU step with the input-side projections already computed.

    Recorded as one fused node with a hand-derived backward; the
    recurrence dominates training time, so the per-step op count matters.
    """
    xzv, xrv, xhv = _as_array(xz), _as_array(xr), _as_array(xh)
    hv = _as_array(h)
    uzv, urv, uhv = params.u_z.data, params.u_r.data, params.u_h.data

    def _sigm(x64):
        return 0.5 * (np.tanh(0.5 * x64) + 1.0)

    z = _sigm(xzv + hv @ uzv)
    r = _sigm(xrv + hv @ urv)
    rh = r * hv
    cand = np.tanh(xhv + rh @ uhv)
    out = Tensor((1.0 - z) * hv + z * cand)

    def bwd(g):
        dcand = g * z
        dz = g * (cand - hv)
        dh = g * (1.0 - z)
        dah = dcand * (1.0 - cand * cand)
        duh = rh.T @ dah
        drh = dah @ uhv.T
        dr = drh * hv
        dh += drh * r
        dar = dr * (r * (1.0 - r))
        dur = hv.T @ dar
        dh += dar @ urv.T
        daz = dz * (z * (1.0 - z))
        duz = hv.T @ daz
        dh += daz @ uzv.T
        return (daz, dar, dah, dh, duz, dur, duh)

    return _record(out, (xz, xr, xh, h, params.u_z, params.u_r, params.u_h), bwd)


def gru_sequence(xz, xr, xh, params: GRUParams, k: int, b: int) -> Tensor:
    """Whole-sequence GRU from a zero state, recorded as a single node.

    Input-side projections xz/xr/xh are (k*b, hidden), time-major; the
    output is (k, b, hidden).  Backward is hand-rolled truncated-nowhere
    BPTT over the stored per-step activations, which keeps the tape small
    on long control sequences.
    """
    xzv = _as_array(xz).reshape(k, b, -1)
    xrv = _as_array(xr).reshape(k, b, -1)
    xhv = _as_array(xh).reshape(k, b, -1)
    uzv, urv, uhv = params.u_z.data, params.u_r.data, params.u_h.data
    hidden = uzv.shape[0]
    dtype = xzv.dtype

    z_all = np.empty((k, b, hidden), dtype=dtype)
    r_all = np.empty_like(z_all)
    c_all = np.empty_like(z_all)
    h_all = np.empty((k + 1, b, hidden), dtype=dtype)
    h_all[0] = 0.0
    for t in range(k):
        h = h_all[t]
        z = 0.5 * (np.tanh(0.5 * (xzv[t] + h @ uzv)) + 1.0)
        r = 0.5 * (np.tanh(0.5 * (xrv[t] + h @ urv)) + 1.0)
        cand = np.tanh(xhv[t] + (r * h) @ uhv)
        z_all[t], r_all[t], c_all[t] = z, r, cand
        h_all[t + 1] = (1.0 - z) * h + z * cand
    out = Tensor(h_all[1:].copy())

    def bwd(g):
        dxz = np.empty_like(z_all)
        dxr = np.empty_like(z_all)
        dxh = np.empty_like(z_all)
        duz = np.zeros_like(uzv)
        dur = np.zeros_like(urv)
        duh = np.zeros_like(uhv)
        dh_next = np.zeros((b, hidden), dtype=dtype)
        for t in range(k - 1, -1, -1):
            g_t = g[t] + dh_next
            h_prev = h_all[t]
            z, r, cand = z_all[t], r_all[t], c_all[t]
            dcand = g_t * z
            dz = g_t * (cand - h_prev)
            dh = g_t * (1.0 - z)
            dah = dcand * (1.0 - cand * cand)
            duh += (r * h_prev).T @ dah
            drh = dah @ uhv.T
            dh += drh * r
            dar = (drh * h_prev) * (r * (1.0 - r))
            dur += h_prev.T @ dar
            dh += dar @ urv.T
            daz = dz * (z * (1.0 - z))
            duz += h_prev.T @ daz
            dh += daz @ uzv.T
            dxz[t], dxr[t], dxh[t] = daz, dar, dah
            dh_next = dh
        flat = (k * b, hidden)
        return (dxz.reshape(flat), dxr.reshape(flat), dxh.reshape(flat),
                duz, dur, duh)

    return _record(out, (xz, xr, xh, params.u_z, params.u_r, params.u_h), bwd)


def init_uniform(rng: np.random.Generator, shape, fan_in: int,
                 dtype=DEFAULT_DTYPE) -> Tensor:
    """uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) parameter tensor."""
    bound = 1.0 / np.sqrt(max(fan_in, 1))
    data = rng.uniform(-bound, bound, size=shape)
    return Tensor(data.astype(dtype), requires_grad=True)


def init_gru(rng: np.random.Generator, n_in: int, n_hidden: int,
             dtype=DEFAULT_DTYPE) -> GRUParams:
    def w(rows, fan):
        return init_uniform(rng, (rows, n_hidden), fan, dtype)

    def b():
        return Tensor(np.zeros(n_hidden, dtype=dtype), requires_grad=True)

    return GRUParams(
        w_z=w(n_in, n_in), u_z=w(n_hidden, n_hidden), b_z=b(),
        w_r=w(n_in, n_in), u_r=w(n_hidden, n_hidden), b_r=b(),
        w_h=w(n_in, n_in), u_h=w(n_hidden, n_hidden), b_h=b(),
    )


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------

@dataclass
class AdamState:
    """Per-parameter first/second moments plus the shared step counter."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: dict, grads: dict, state: AdamState) -> AdamState:
    """Standard bias-corrected Adam update, in place on params' data.

    `params` maps names to Tensors, `grads` names to arrays; parameters
    without a gradient entry are left untouched.
    """
    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    for name in sorted(params):
        if name not in grads or grads[name] is None:
            continue
        p = params[name]
        g = grads[name]
        if g.shape != p.data.shape:
            raise ContractViolation(f"gradient shape mismatch for {name}")
        if name not in state.m:
            state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        m_hat = m / bc1
        v_hat = v / bc2
        p.data -= (state.lr * m_hat / (np.sqrt(v_hat) + state.eps)).astype(p.data.dtype)
    return state
