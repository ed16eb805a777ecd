"""
Forward/backward pairs for the cross-encoder blocks. Inputs are batched
(B, T, H); every forward returns (output, cache) and the matching backward
takes (grad_output, cache) and returns the input gradient plus parameter grads.
"""

from __future__ import annotations

import math
from typing import Dict, Tuple

import numpy as np

from app.encoders.params import softmax

LN_EPS = 1e-12
MASK_VALUE = -1e9
_GELU_C = math.sqrt(2.0 / math.pi)


# -----------------------------
# Layer norm
# -----------------------------
def layer_norm_forward(x: np.ndarray, g: np.ndarray, b: np.ndarray):
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + LN_EPS)
    xhat = (x - mu) * inv_std
    return xhat * g + b, (xhat, inv_std, g)


def layer_norm_backward(dy: np.ndarray, cache) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    xhat, inv_std, g = cache
    reduce_axes = tuple(range(dy.ndim - 1))
    dg = np.sum(dy * xhat, axis=reduce_axes)
    db = np.sum(dy, axis=reduce_axes)
    dxhat = dy * g
    dx = inv_std * (
        dxhat
        - dxhat.mean(axis=-1, keepdims=True)
        - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
    )
    return dx, dg, db


# -----------------------------
# GELU (tanh form)
# -----------------------------
def gelu_forward(x: np.ndarray):
    inner = _GELU_C * (x + 0.044715 * x ** 3)
    t = np.tanh(inner)
    return 0.5 * x * (1.0 + t), (x, t)


def gelu_backward(dy: np.ndarray, cache) -> np.ndarray:
    x, t = cache
    d_inner = _GELU_C * (1.0 + 3 * 0.044715 * x ** 2)
    return dy * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t ** 2) * d_inner)


# -----------------------------
# Linear
# -----------------------------
def linear_forward(x: np.ndarray, W: np.ndarray, b: np.ndarray):
    return x @ W + b, x


def linear_backward(dy: np.ndarray, x: np.ndarray, W: np.ndarray):
    H_in = W.shape[0]
    dW = x.reshape(-1, H_in).T @ dy.reshape(-1, W.shape[1])
    db = dy.reshape(-1, W.shape[1]).sum(axis=0)
    return dy @ W.T, dW, db


# -----------------------------
# Multi-head self-attention
# -----------------------------
def _split_heads(x: np.ndarray, heads: int) -> np.ndarray:
    B, T, H = x.shape
    return x.reshape(B, T, heads, H // heads).transpose(0, 2, 1, 3)


def _merge_heads(x: np.ndarray) -> np.ndarray:
    B, h, T, d = x.shape
    return x.transpose(0, 2, 1, 3).reshape(B, T, h * d)


def attention_forward(x: np.ndarray, p: Dict[str, np.ndarray], prefix: str, heads: int,
                      key_mask: np.ndarray):
    """
    key_mask: (B, T) boolean, True for real tokens. Padded keys get zero weight,
    so each query row of the attention matrix sums to 1 over real tokens.
    """
    q, _ = linear_forward(x, p[prefix + "Wq"], p[prefix + "bq"])
    k, _ = linear_forward(x, p[prefix + "Wk"], p[prefix + "bk"])
    v, _ = linear_forward(x, p[prefix + "Wv"], p[prefix + "bv"])
    qh, kh, vh = _split_heads(q, heads), _split_heads(k, heads), _split_heads(v, heads)
    scale = 1.0 / math.sqrt(qh.shape[-1])
    scores = (qh @ kh.transpose(0, 1, 3, 2)) * scale
    scores = np.where(key_mask[:, None, None, :], scores, MASK_VALUE)
    attn = softmax(scores, axis=-1)
    ctx = _merge_heads(attn @ vh)
    out, _ = linear_forward(ctx, p[prefix + "Wo"], p[prefix + "bo"])
    cache = (x, qh, kh, vh, attn, ctx, scale, heads)
    return out, cache


def attention_backward(dout: np.ndarray, cache, p: Dict[str, np.ndarray], prefix: str,
                       grads: Dict[str, np.ndarray]) -> np.ndarray:
    x, qh, kh, vh, attn, ctx, scale, heads = cache
    dctx, grads[prefix + "Wo"], grads[prefix + "bo"] = linear_backward(dout, ctx, p[prefix + "Wo"])
    dctx_h = _split_heads(dctx, heads)
    dattn = dctx_h @ vh.transpose(0, 1, 3, 2)
    dvh = attn.transpose(0, 1, 3, 2) @ dctx_h
    dscores = attn * (dattn - np.sum(dattn * attn, axis=-1, keepdims=True))
    dqh = (dscores @ kh) * scale
    dkh = (dscores.transpose(0, 1, 3, 2) @ qh) * scale
    dx = np.zeros_like(x)
    for name, dh in (("q", dqh), ("k", dkh), ("v", dvh)):
        d_in, grads[prefix + "W" + name], grads[prefix + "b" + name] = linear_backward(
            _merge_heads(dh), x, p[prefix + "W" + name]
        )
        dx += d_in
    return dx
