"""Gated recurrent unit built from scratch on float64 numpy.

A single per-bin cell is tiny (hidden size 1), so running one Python loop
per cell would dominate runtime. Instead, parameters carry an optional
leading model axis ("stack") and the time recursion runs once for a whole
stack of cells; the single-model functions are thin wrappers over the
stacked kernels with a batch of one.

Conventions:
  - gate rows ordered reset, update, candidate;
  - the candidate's recurrent product is gated after the matrix multiply
    (r * (W_hc h + b_hc)) and the cell keeps two separate bias vectors,
    so a cell holds exactly 3h(n + h + 2) parameters;
  - the output head is a Softplus with fixed sharpness beta, optionally
    hard-clamped to [0, 1]; clamped samples propagate zero gradient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    InvalidDimsError,
    LengthMismatchError,
    ShapeMismatchError,
    StaleCacheError,
)


@dataclass
class GruParams:
    w_input: np.ndarray  # (3h, n)
    w_recurrent: np.ndarray  # (3h, h)
    bias_input: np.ndarray  # (3h,)
    bias_recurrent: np.ndarray  # (3h,)
    n: int
    h: int

    def param_count(self) -> int:
        return (
            self.w_input.size
            + self.w_recurrent.size
            + self.bias_input.size
            + self.bias_recurrent.size
        )


@dataclass
class HeadConfig:
    beta: float = 10.0  # Softplus sharpness
    clamp: bool = True  # clip estimates to [0, 1]


@dataclass
class AdamState:
    m: GruParams
    v: GruParams
    step_count: int
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0


def init_gru(n: int, h: int, seed: int) -> GruParams:
    """Uniform init on [-1/sqrt(h), 1/sqrt(h)], deterministic per (n, h, seed)."""
    if n < 1 or h < 1:
        raise InvalidDimsError(f"need n >= 1 and h >= 1, got n={n}, h={h}")
    rng = np.random.default_rng(seed)
    bound = 1.0 / math.sqrt(h)
    return GruParams(
        w_input=rng.uniform(-bound, bound, size=(3 * h, n)),
        w_recurrent=rng.uniform(-bound, bound, size=(3 * h, h)),
        bias_input=rng.uniform(-bound, bound, size=3 * h),
        bias_recurrent=rng.uniform(-bound, bound, size=3 * h),
        n=n,
        h=h,
    )


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


# ---------------------------------------------------------------------------
# Stacked kernels: a leading axis runs over independent models.
# ---------------------------------------------------------------------------


@dataclass
class GruStack:
    """Weights of B independent cells sharing one (n, h) shape."""

    w_input: np.ndarray  # (B, 3h, n)
    w_recurrent: np.ndarray  # (B, 3h, h)
    bias_input: np.ndarray  # (B, 3h)
    bias_recurrent: np.ndarray  # (B, 3h)

    @property
    def models(self) -> int:
        return self.w_input.shape[0]

    @property
    def n(self) -> int:
        return self.w_input.shape[2]

    @property
    def h(self) -> int:
        return self.w_recurrent.shape[2]

    def arrays(self):
        return (self.w_input, self.w_recurrent, self.bias_input, self.bias_recurrent)

    def zeros_like(self) -> "GruStack":
        return GruStack(*(np.zeros_like(a) for a in self.arrays()))

    def copy(self) -> "GruStack":
        return GruStack(*(a.copy() for a in self.arrays()))


@dataclass
class StackCache:
    stack: GruStack
    x: np.ndarray  # (L, B, n)
    h0: np.ndarray  # (B, h)
    h_seq: np.ndarray  # (L, B, h)
    r_seq: np.ndarray
    z_seq: np.ndarray
    c_seq: np.ndarray
    s_seq: np.ndarray  # recurrent candidate pre-activation W_hc h + b_hc


def forward_stack(stack: GruStack, x: np.ndarray, h0: np.ndarray | None = None):
    """Run all models over an (L, B, n) input batch; returns (h_seq, cache)."""
    num_frames, batch, n_in = x.shape
    if batch != stack.models or n_in != stack.n:
        raise ShapeMismatchError(
            f"input ({batch} models, n={n_in}) vs stack ({stack.models}, n={stack.n})"
        )
    hidden = stack.h
    if h0 is None:
        h = np.zeros((batch, hidden))
    else:
        if h0.shape != (batch, hidden):
            raise ShapeMismatchError(f"h0 shape {h0.shape} != {(batch, hidden)}")
        h = h0.astype(np.float64).copy()
    h_start = h.copy()

    gates_in = np.einsum("bij,lbj->lbi", stack.w_input, x) + stack.bias_input
    w_hh = stack.w_recurrent
    b_hh = stack.bias_recurrent

    h_seq = np.empty((num_frames, batch, hidden))
    r_seq = np.empty_like(h_seq)
    z_seq = np.empty_like(h_seq)
    c_seq = np.empty_like(h_seq)
    s_seq = np.empty_like(h_seq)

    for t in range(num_frames):
        gates_rec = np.einsum("bij,bj->bi", w_hh, h) + b_hh
        gi = gates_in[t]
        r = _sigmoid(gi[:, :hidden] + gates_rec[:, :hidden])
        z = _sigmoid(gi[:, hidden : 2 * hidden] + gates_rec[:, hidden : 2 * hidden])
        s = gates_rec[:, 2 * hidden :]
        c = np.tanh(gi[:, 2 * hidden :] + r * s)
        h = (1.0 - z) * c + z * h
        r_seq[t] = r
        z_seq[t] = z
        c_seq[t] = c
        s_seq[t] = s
        h_seq[t] = h

    cache = StackCache(
        stack=stack, x=x, h0=h_start, h_seq=h_seq,
        r_seq=r_seq, z_seq=z_seq, c_seq=c_seq, s_seq=s_seq,
    )
    return h_seq, cache


def backward_stack(stack: GruStack, cache: StackCache, d_hseq: np.ndarray) -> GruStack:
    """Reverse accumulation through time; d_hseq is dLoss/d h_seq, (L, B, h).

    Returns gradients in a GruStack-shaped container. The carried state at a
    chunk boundary is treated as a constant (no gradient flows into h0).
    """
    if cache.stack is not stack:
        raise StaleCacheError("cache was produced by a different parameter stack")
    if d_hseq.shape != cache.h_seq.shape:
        raise ShapeMismatchError(f"d_hseq {d_hseq.shape} != {cache.h_seq.shape}")
    num_frames, batch, hidden = cache.h_seq.shape
    w_hh = stack.w_recurrent

    # gate pre-activation grads: input side keeps da_c, recurrent side keeps ds
    d_gates_in = np.empty((num_frames, batch, 3 * hidden))
    d_gates_rec = np.empty_like(d_gates_in)

    dh_carry = np.zeros((batch, hidden))
    for t in range(num_frames - 1, -1, -1):
        h_prev = cache.h_seq[t - 1] if t > 0 else cache.h0
        r = cache.r_seq[t]
        z = cache.z_seq[t]
        c = cache.c_seq[t]
        s = cache.s_seq[t]
        dh = d_hseq[t] + dh_carry
        dz = dh * (h_prev - c)
        da_z = dz * z * (1.0 - z)
        dc = dh * (1.0 - z)
        da_c = dc * (1.0 - c * c)
        dr = da_c * s
        da_r = dr * r * (1.0 - r)
        ds = da_c * r
        d_gates_in[t, :, :hidden] = da_r
        d_gates_in[t, :, hidden : 2 * hidden] = da_z
        d_gates_in[t, :, 2 * hidden :] = da_c
        d_gates_rec[t, :, :hidden] = da_r
        d_gates_rec[t, :, hidden : 2 * hidden] = da_z
        d_gates_rec[t, :, 2 * hidden :] = ds
        dh_carry = dh * z + np.einsum("bij,bi->bj", w_hh, d_gates_rec[t])

    h_prev_seq = np.concatenate([cache.h0[None], cache.h_seq[:-1]], axis=0)
    return GruStack(
        w_input=np.einsum("lbi,lbj->bij", d_gates_in, cache.x),
        w_recurrent=np.einsum("lbi,lbj->bij", d_gates_rec, h_prev_seq),
        bias_input=d_gates_in.sum(axis=0),
        bias_recurrent=d_gates_rec.sum(axis=0),
    )


def softplus_raw(x: np.ndarray, beta: float) -> np.ndarray:
    """Overflow-safe (1/beta) * ln(1 + exp(beta * x)); identity for beta*x > 30."""
    z = beta * x
    return np.where(z > 30.0, x, np.log1p(np.exp(np.minimum(z, 30.0))) / beta)


def softplus_head(h_seq: np.ndarray, cfg: HeadConfig) -> np.ndarray:
    """Map hidden states to SPP estimates."""
    if cfg.beta <= 0.0:
        raise ValueError("beta must be > 0")
    y = softplus_raw(h_seq, cfg.beta)
    if cfg.clamp:
        y = np.minimum(y, 1.0)
    return y


def head_forward_and_grad(h_seq: np.ndarray, cfg: HeadConfig):
    """Returns (estimates, d estimates / d hidden state)."""
    if cfg.beta <= 0.0:
        raise ValueError("beta must be > 0")
    z = cfg.beta * h_seq
    raw = np.where(z > 30.0, h_seq, np.log1p(np.exp(np.minimum(z, 30.0))) / cfg.beta)
    grad = np.where(z > 30.0, 1.0, _sigmoid(z))
    if cfg.clamp:
        clamped = raw > 1.0
        return np.where(clamped, 1.0, raw), np.where(clamped, 0.0, grad)
    return raw, grad


def mse_loss(est: np.ndarray, target: np.ndarray) -> float:
    """Mean squared error over all entries."""
    est = np.asarray(est, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if est.shape != target.shape or est.size == 0:
        raise LengthMismatchError(f"estimate {est.shape} vs target {target.shape}")
    return float(np.mean((target - est) ** 2))


# ---------------------------------------------------------------------------
# Single-model wrappers (batch of one over the stacked kernels).
# ---------------------------------------------------------------------------


@dataclass
class GruCache:
    params: GruParams
    stack: GruStack
    stack_cache: StackCache


def _as_stack(p: GruParams) -> GruStack:
    return GruStack(
        w_input=p.w_input[None],
        w_recurrent=p.w_recurrent[None],
        bias_input=p.bias_input[None],
        bias_recurrent=p.bias_recurrent[None],
    )


def gru_forward(p: GruParams, x_seq: np.ndarray, h0: np.ndarray | None = None):
    """Run one cell over an (L, n) sequence; returns (h_seq (L, h), cache)."""
    x_seq = np.asarray(x_seq, dtype=np.float64)
    if x_seq.ndim != 2 or x_seq.shape[1] != p.n or x_seq.shape[0] < 1:
        raise ShapeMismatchError(f"expected (L, {p.n}) input, got {x_seq.shape}")
    stack = _as_stack(p)
    start = None if h0 is None else np.asarray(h0, dtype=np.float64).reshape(1, p.h)
    h_seq, cache = forward_stack(stack, x_seq[:, None, :], start)
    return h_seq[:, 0, :], GruCache(params=p, stack=stack, stack_cache=cache)


def gru_backward(
    p: GruParams, cache: GruCache, head_cfg: HeadConfig, target_seq: np.ndarray
) -> GruParams:
    """Exact gradient of mse_loss(softplus_head(gru_forward(...)), target).

    The returned container is shaped like GruParams, with gradients in the
    weight fields.
    """
    if cache.params is not p:
        raise StaleCacheError("cache was produced for different parameters")
    h_seq = cache.stack_cache.h_seq[:, 0, :]
    target = np.asarray(target_seq, dtype=np.float64)
    if target.ndim == 1:
        target = target[:, None]
    if target.shape != h_seq.shape:
        raise ShapeMismatchError(f"target {target.shape} vs states {h_seq.shape}")
    est, d_est_dh = head_forward_and_grad(h_seq, head_cfg)
    d_h = (2.0 / target.size) * (est - target) * d_est_dh
    grads = backward_stack(cache.stack, cache.stack_cache, d_h[:, None, :])
    return GruParams(
        w_input=grads.w_input[0],
        w_recurrent=grads.w_recurrent[0],
        bias_input=grads.bias_input[0],
        bias_recurrent=grads.bias_recurrent[0],
        n=p.n,
        h=p.h,
    )


def _adam_update_inplace(param, grad, m, v, step_count, lr, beta1, beta2, eps, weight_decay):
    g = grad + weight_decay * param if weight_decay != 0.0 else grad
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * g * g
    m_hat = m / (1.0 - beta1**step_count)
    v_hat = v / (1.0 - beta2**step_count)
    param -= lr * m_hat / (np.sqrt(v_hat) + eps)


def _zeros_like_params(p: GruParams) -> GruParams:
    return GruParams(
        w_input=np.zeros_like(p.w_input),
        w_recurrent=np.zeros_like(p.w_recurrent),
        bias_input=np.zeros_like(p.bias_input),
        bias_recurrent=np.zeros_like(p.bias_recurrent),
        n=p.n,
        h=p.h,
    )


def adam_init(
    p: GruParams, lr: float, weight_decay: float = 0.0,
    beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8,
) -> AdamState:
    return AdamState(m=_zeros_like_params(p), v=_zeros_like_params(p), step_count=0,
                     lr=lr, beta1=beta1, beta2=beta2, eps=eps, weight_decay=weight_decay)


def adam_step(p: GruParams, grads: GruParams, s: AdamState):
    """Classic Adam with bias correction; weight decay joins the gradient.

    Functional: returns (updated params, updated state) without mutating
    the inputs.
    """
    fields = ("w_input", "w_recurrent", "bias_input", "bias_recurrent")
    for name in fields:
        if getattr(p, name).shape != getattr(grads, name).shape:
            raise ShapeMismatchError(f"gradient shape mismatch on {name}")
    step_count = s.step_count + 1
    new_params = {}
    new_m = {}
    new_v = {}
    for name in fields:
        param = getattr(p, name).copy()
        m = getattr(s.m, name).copy()
        v = getattr(s.v, name).copy()
        _adam_update_inplace(
            param, getattr(grads, name), m, v, step_count,
            s.lr, s.beta1, s.beta2, s.eps, s.weight_decay,
        )
        new_params[name] = param
        new_m[name] = m
        new_v[name] = v
    updated = GruParams(**new_params, n=p.n, h=p.h)
    state = AdamState(
        m=GruParams(**new_m, n=p.n, h=p.h),
        v=GruParams(**new_v, n=p.n, h=p.h),
        step_count=step_count,
        lr=s.lr, beta1=s.beta1, beta2=s.beta2, eps=s.eps, weight_decay=s.weight_decay,
    )
    return updated, state


@dataclass
class AdamStackState:
    m: GruStack
    v: GruStack
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0


def adam_init_stack(stack: GruStack, weight_decay: float = 0.0) -> AdamStackState:
    return AdamStackState(m=stack.zeros_like(), v=stack.zeros_like(), weight_decay=weight_decay)


def adam_step_stack(stack: GruStack, grads: GruStack, s: AdamStackState, lr: float) -> None:
    """In-place Adam over a whole stack (trainer-owned state)."""
    s.step_count += 1
    for param, grad, m, v in zip(stack.arrays(), grads.arrays(), s.m.arrays(), s.v.arrays()):
        _adam_update_inplace(param, grad, m, v, s.step_count, lr, s.beta1, s.beta2, s.eps, s.weight_decay)
