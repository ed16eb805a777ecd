"""
Parameter plumbing shared by both encoder families: parameter dicts,
optimizers, numerically stable helpers and the finite-difference gradient check.

Every model keeps its trainable state as an ordered ``Dict[str, np.ndarray]``
and exposes ``loss_and_grads(batch)`` returning ``(loss, grads)`` with grads
keyed like the params.
"""

from __future__ import annotations

from typing import Callable, Dict, Optional

import numpy as np

ParamSet = Dict[str, np.ndarray]


# -----------------------------
# Numerics
# -----------------------------
def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    z = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=axis, keepdims=True)


def log_softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    z = x - np.max(x, axis=axis, keepdims=True)
    return z - np.log(np.sum(np.exp(z), axis=axis, keepdims=True))


def sigmoid(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def all_finite(params: ParamSet) -> bool:
    return all(bool(np.all(np.isfinite(p))) for p in params.values())


def zeros_like(params: ParamSet) -> ParamSet:
    return {k: np.zeros_like(v) for k, v in params.items()}


def param_count(params: ParamSet) -> int:
    return int(sum(p.size for p in params.values()))


# -----------------------------
# Optimizers
# -----------------------------
class SGD:
    def __init__(self, lr: float) -> None:
        self.lr = lr

    def step(self, params: ParamSet, grads: ParamSet) -> None:
        for name, g in grads.items():
            params[name] -= self.lr * g


class Adam:
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m: ParamSet = {}
        self._v: ParamSet = {}

    def step(self, params: ParamSet, grads: ParamSet) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        corr1 = 1.0 - b1 ** self.t
        corr2 = 1.0 - b2 ** self.t
        for name, g in grads.items():
            m = self._m.setdefault(name, np.zeros_like(g))
            v = self._v.setdefault(name, np.zeros_like(g))
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            params[name] -= self.lr * (m / corr1) / (np.sqrt(v / corr2) + self.eps)


def make_optimizer(kind: str, lr: float):
    if kind == "adam":
        return Adam(lr)
    return SGD(lr)


# -----------------------------
# Gradient check
# -----------------------------
def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """|g_a - g_n| / max(1e-8, |g_a| + |g_n|) with L2 norms over one parameter tensor."""
    num = float(np.linalg.norm(analytic - numeric))
    den = max(1e-8, float(np.linalg.norm(analytic)) + float(np.linalg.norm(numeric)))
    return num / den


def numeric_gradients(params: ParamSet, loss_fn: Callable[[], float], eps: float = 1e-6,
                      names: Optional[list] = None) -> ParamSet:
    """Central differences (f(θ+eps) - f(θ-eps)) / (2·eps), element by element, in place."""
    out: ParamSet = {}
    for name in names or list(params.keys()):
        p = params[name]
        g = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            orig = p[idx]
            p[idx] = orig + eps
            plus = loss_fn()
            p[idx] = orig - eps
            minus = loss_fn()
            p[idx] = orig
            g[idx] = (plus - minus) / (2.0 * eps)
        out[name] = g
    return out


def max_relative_error(analytic: ParamSet, numeric: ParamSet) -> float:
    worst = 0.0
    for name, g_n in numeric.items():
        worst = max(worst, relative_error(analytic[name], g_n))
    return worst


def check_gradients(params: ParamSet, loss_and_grads: Callable[[], tuple], eps: float = 1e-6) -> float:
    _, analytic = loss_and_grads()
    numeric = numeric_gradients(params, lambda: float(loss_and_grads()[0]), eps)
    return max_relative_error(analytic, numeric)
