"""Shared neural building blocks with hand-derived gradients.

Everything is float64. The sequential LSTM recurrence runs in the kernel
backend; the dense input/output projections stay here as BLAS matmuls.
Parameters live in plain numpy arrays exposed through ``params()`` dicts
so that optimizers and finite-difference checks can treat every model
uniformly.
"""
from __future__ import annotations

import numpy as np

from . import _kernels as K


def uniform_init(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = (1.0 / fan_in) ** 0.5
    return rng.uniform(-bound, bound, size=shape)


def sigmoid(x):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


class LSTMLayer:
    """Single-direction LSTM, gate order i,f,g,o, forget-gate bias +1."""

    def __init__(self, input_dim: int, hidden_dim: int, rng: np.random.Generator):
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        self.wx = uniform_init(rng, (4 * hidden_dim, input_dim), input_dim)
        self.wh = uniform_init(rng, (4 * hidden_dim, hidden_dim), hidden_dim)
        self.b = np.zeros(4 * hidden_dim)
        self.b[hidden_dim:2 * hidden_dim] = 1.0

    def params(self) -> dict[str, np.ndarray]:
        return {"wx": self.wx, "wh": self.wh, "b": self.b}

    def forward(self, x: np.ndarray, h0=None, c0=None):
        """x: (T, input_dim). Returns (h, cache) with h: (T, hidden_dim)."""
        if h0 is None:
            h0 = np.zeros(self.hidden_dim)
        if c0 is None:
            c0 = np.zeros(self.hidden_dim)
        xw = np.ascontiguousarray(x @ self.wx.T + self.b)
        h, c, gates = K.lstm_cell_forward(xw, self.wh, h0, c0)
        return h, (x, h, c, gates, h0, c0)

    def backward(self, dh_out: np.ndarray, cache):
        """dh_out: (T, hidden_dim) gradient w.r.t. every hidden state.

        Returns (dx, grads, dh0, dc0).
        """
        x, h, c, gates, h0, c0 = cache
        da, dwh, dh0, dc0 = K.lstm_cell_backward(
            np.ascontiguousarray(dh_out), gates, c, h, self.wh, h0, c0)
        grads = {"wx": da.T @ x, "wh": dwh, "b": da.sum(axis=0)}
        dx = da @ self.wx
        return dx, grads, dh0, dc0

    def final_state(self, cache):
        """Hidden state after the last step (for sequence classification)."""
        _, h, _, _, _, _ = cache
        return h[-1]


class Linear:
    """Affine map y = x @ w.T + b."""

    def __init__(self, input_dim: int, output_dim: int, rng: np.random.Generator):
        self.w = uniform_init(rng, (output_dim, input_dim), input_dim)
        self.b = np.zeros(output_dim)

    def params(self) -> dict[str, np.ndarray]:
        return {"w": self.w, "b": self.b}

    def forward(self, x: np.ndarray):
        return x @ self.w.T + self.b, x

    def backward(self, dy: np.ndarray, cache):
        x = cache
        if dy.ndim == 1:
            dy = dy[None, :]
            x = x[None, :]
        grads = {"w": dy.T @ x, "b": dy.sum(axis=0)}
        return dy @ self.w, grads


def softmax_xent(logits: np.ndarray, targets: np.ndarray):
    """Summed cross entropy of (T, V) logits against int targets.

    Returns (loss, dlogits, probs).
    """
    shift = logits - logits.max(axis=1, keepdims=True)
    expv = np.exp(shift)
    probs = expv / expv.sum(axis=1, keepdims=True)
    rows = np.arange(len(targets))
    logp = shift[rows, targets] - np.log(expv.sum(axis=1))
    loss = -float(logp.sum())
    dlogits = probs.copy()
    dlogits[rows, targets] -= 1.0
    return loss, dlogits, probs


def dropout_mask(shape, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Inverted-dropout multiplier; identity when rate == 0."""
    if rate <= 0.0:
        return np.ones(shape)
    return (rng.random(shape) >= rate) / (1.0 - rate)


def global_norm(grads: dict[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float((g * g).sum()) for g in grads.values())))


def clip_gradients(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Scale all gradients in place so the global L2 norm is <= max_norm."""
    norm = global_norm(grads)
    if max_norm > 0 and norm > max_norm:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm

def sgd_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray], lr: float):
    for name, g in grads.items():
        params[name] -= lr * g


def merge_grads(into: dict[str, np.ndarray], part: dict[str, np.ndarray], prefix: str = ""):
    """Accumulate a (possibly prefixed) gradient dict into a flat one."""
    for name, g in part.items():
        key = prefix + name
        if key in into:
            into[key] += g
        else:
            into[key] = g.copy()
    return into
