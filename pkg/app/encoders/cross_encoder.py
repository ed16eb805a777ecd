"""
Joint-input transformer classifier over ``[CLS] keyphrase [SEP] category [SEP] title``.

Pre-norm blocks (LN -> multi-head self-attention -> residual, LN -> GELU FFN ->
residual), learned absolute positions, final LN on the CLS position, linear
head, sigmoid. Forward and backward are written out by hand in numpy.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.encoders.checkpoint import load_checkpoint, params_fingerprint, save_checkpoint
from app.encoders.layers import (
    attention_backward,
    attention_forward,
    gelu_backward,
    gelu_forward,
    layer_norm_backward,
    layer_norm_forward,
    linear_backward,
    linear_forward,
)
from app.encoders.params import Adam, ParamSet, all_finite, check_gradients, param_count, sigmoid
from app.errors import ConfigError, SequenceError, TrainingDivergedError
from app.text_core.sequences import DEFAULT_MAX_LEN, TokenSeq
from app.text_core.vocab import CLS, PAD, Vocab

logger = logging.getLogger(__name__)

FAMILY = "cross"


class CrossEncoderConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    layers: int = Field(default=2, ge=1)
    hidden: int = Field(default=128, ge=1)
    heads: int = Field(default=2, ge=1)
    ffn_dim: int = Field(default=512, ge=1)
    max_seq_len: int = Field(default=DEFAULT_MAX_LEN, ge=1)
    vocab_size: int = Field(ge=5)
    seed: int = 0
    init_std: float = Field(default=0.02, gt=0)

    @model_validator(mode="after")
    def _heads_divide_hidden(self) -> "CrossEncoderConfig":
        if self.hidden % self.heads != 0:
            raise ValueError(f"hidden ({self.hidden}) must be divisible by heads ({self.heads})")
        return self


# heads / ffn follow the compact-BERT convention (heads = H/64, ffn = 4H)
PRESETS: Dict[str, Dict[str, int]] = {
    "tiny": {"layers": 2, "hidden": 128, "heads": 2, "ffn_dim": 512},
    "mini": {"layers": 4, "hidden": 256, "heads": 4, "ffn_dim": 1024},
    "micro": {"layers": 1, "hidden": 8, "heads": 2, "ffn_dim": 32},
}


def preset_config(name: str, vocab_size: int, max_seq_len: int = DEFAULT_MAX_LEN, seed: int = 0) -> CrossEncoderConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown cross-encoder preset {name!r}; choose from {sorted(PRESETS)}")
    return CrossEncoderConfig(vocab_size=vocab_size, max_seq_len=max_seq_len, seed=seed, **PRESETS[name])


class CrossTrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    preset: str = "tiny"
    epochs: int = Field(default=8, ge=1)
    lr: float = Field(default=1e-3, gt=0)
    batch_size: int = Field(default=32, ge=1)
    threshold: float = Field(default=0.5, ge=0.0, le=1.0)
    seed: int = 0


FULL_SCALE_TRAIN = {"epochs": 4, "lr": 2e-5}


def expected_param_count(cfg: CrossEncoderConfig) -> int:
    H, F = cfg.hidden, cfg.ffn_dim
    per_layer = 2 * H + 4 * (H * H + H) + 2 * H + (H * F + F) + (F * H + H)
    return cfg.vocab_size * H + cfg.max_seq_len * H + cfg.layers * per_layer + 2 * H + H + 1


@dataclass
class CrossTrainResult:
    model: "CrossEncoderModel"
    losses: List[float] = field(default_factory=list)


class CrossEncoderModel:
    def __init__(self, cfg: CrossEncoderConfig, zero_head: bool = False, vocab_hash: str = "") -> None:
        self.cfg = cfg
        self.vocab_hash = vocab_hash
        self.threshold = 0.5
        self.preset = next((k for k, v in PRESETS.items()
                            if all(getattr(cfg, f) == n for f, n in v.items())), "custom")
        rng = np.random.default_rng(cfg.seed)
        H, F, std = cfg.hidden, cfg.ffn_dim, cfg.init_std

        p: ParamSet = {
            "tok_emb": rng.normal(0.0, std, (cfg.vocab_size, H)),
            "pos_emb": rng.normal(0.0, std, (cfg.max_seq_len, H)),
        }
        for i in range(cfg.layers):
            pre = f"l{i}."
            p[pre + "ln1_g"] = np.ones(H)
            p[pre + "ln1_b"] = np.zeros(H)
            for n in "qkvo":
                p[pre + "W" + n] = rng.normal(0.0, std, (H, H))
                p[pre + "b" + n] = np.zeros(H)
            p[pre + "ln2_g"] = np.ones(H)
            p[pre + "ln2_b"] = np.zeros(H)
            p[pre + "W1"] = rng.normal(0.0, std, (H, F))
            p[pre + "b1"] = np.zeros(F)
            p[pre + "W2"] = rng.normal(0.0, std, (F, H))
            p[pre + "b2"] = np.zeros(H)
        p["lnf_g"] = np.ones(H)
        p["lnf_b"] = np.zeros(H)
        p["head_w"] = np.zeros(H) if zero_head else rng.normal(0.0, std, H)
        p["head_b"] = np.zeros(1)
        self.params = p

    @classmethod
    def from_preset(cls, name: str, vocab: Vocab, max_seq_len: int = DEFAULT_MAX_LEN, seed: int = 0) -> "CrossEncoderModel":
        return cls(preset_config(name, len(vocab), max_seq_len, seed), vocab_hash=vocab.fingerprint())

    @property
    def model_version(self) -> str:
        return params_fingerprint(FAMILY, self.params, {"threshold": self.threshold})

    @property
    def num_params(self) -> int:
        return param_count(self.params)

    # -----------------------------
    # Input checks / padding
    # -----------------------------
    def _validate(self, seq: TokenSeq) -> None:
        if not 1 <= len(seq) <= self.cfg.max_seq_len:
            raise SequenceError(f"sequence length {len(seq)} outside [1, {self.cfg.max_seq_len}]")
        if seq[0] != CLS:
            raise SequenceError("sequence must start with [CLS]")

    def _pad(self, seqs: Sequence[TokenSeq]) -> Tuple[np.ndarray, np.ndarray]:
        T = max(len(s) for s in seqs)
        ids = np.full((len(seqs), T), PAD, dtype=np.int64)
        mask = np.zeros((len(seqs), T), dtype=bool)
        for r, s in enumerate(seqs):
            ids[r, :len(s)] = s
            mask[r, :len(s)] = True
        return ids, mask

    # -----------------------------
    # Forward / backward
    # -----------------------------
    def _forward(self, ids: np.ndarray, mask: np.ndarray):
        p, cfg = self.params, self.cfg
        T = ids.shape[1]
        x = p["tok_emb"][ids] + p["pos_emb"][:T]
        caches = []
        for i in range(cfg.layers):
            pre = f"l{i}."
            a, c_ln1 = layer_norm_forward(x, p[pre + "ln1_g"], p[pre + "ln1_b"])
            att, c_att = attention_forward(a, p, pre, cfg.heads, mask)
            x1 = x + att
            f, c_ln2 = layer_norm_forward(x1, p[pre + "ln2_g"], p[pre + "ln2_b"])
            h1, _ = linear_forward(f, p[pre + "W1"], p[pre + "b1"])
            g, c_gelu = gelu_forward(h1)
            h2, _ = linear_forward(g, p[pre + "W2"], p[pre + "b2"])
            x = x1 + h2
            caches.append((c_ln1, c_att, c_ln2, f, c_gelu, g))
        hf, c_lnf = layer_norm_forward(x[:, 0, :], p["lnf_g"], p["lnf_b"])
        logits = hf @ p["head_w"] + p["head_b"][0]
        return logits, (ids, caches, c_lnf, hf)

    def _backward(self, dlogits: np.ndarray, cache) -> ParamSet:
        p, cfg = self.params, self.cfg
        ids, caches, c_lnf, hf = cache
        B, T = ids.shape
        grads: ParamSet = {
            "head_w": hf.T @ dlogits,
            "head_b": np.array([dlogits.sum()]),
        }
        dcls, grads["lnf_g"], grads["lnf_b"] = layer_norm_backward(np.outer(dlogits, p["head_w"]), c_lnf)
        dx = np.zeros((B, T, cfg.hidden))
        dx[:, 0, :] = dcls
        for i in reversed(range(cfg.layers)):
            pre = f"l{i}."
            c_ln1, c_att, c_ln2, f, c_gelu, g = caches[i]
            dg, grads[pre + "W2"], grads[pre + "b2"] = linear_backward(dx, g, p[pre + "W2"])
            dh1 = gelu_backward(dg, c_gelu)
            df, grads[pre + "W1"], grads[pre + "b1"] = linear_backward(dh1, f, p[pre + "W1"])
            dx1_ln, grads[pre + "ln2_g"], grads[pre + "ln2_b"] = layer_norm_backward(df, c_ln2)
            dx1 = dx + dx1_ln
            da = attention_backward(dx1, c_att, p, pre, grads)
            dx_ln, grads[pre + "ln1_g"], grads[pre + "ln1_b"] = layer_norm_backward(da, c_ln1)
            dx = dx1 + dx_ln
        dtok = np.zeros_like(p["tok_emb"])
        np.add.at(dtok, ids, dx)
        dpos = np.zeros_like(p["pos_emb"])
        dpos[:T] = dx.sum(axis=0)
        grads["tok_emb"] = dtok
        grads["pos_emb"] = dpos
        return grads

    def loss_and_grads(self, pairs: Sequence[Tuple[TokenSeq, int]]) -> Tuple[float, ParamSet]:
        """Mean binary cross-entropy over the batch and its gradients."""
        seqs = [s for s, _ in pairs]
        for s in seqs:
            self._validate(s)
        y = np.array([lbl for _, lbl in pairs], dtype=np.float64)
        ids, mask = self._pad(seqs)
        z, cache = self._forward(ids, mask)
        loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
        dz = (sigmoid(z) - y) / len(pairs)
        return loss, self._backward(dz, cache)

    def forward(self, seq: TokenSeq) -> float:
        self._validate(seq)
        ids, mask = self._pad([seq])
        z, _ = self._forward(ids, mask)
        return float(sigmoid(z)[0])

    def predict_batch(self, seqs: Sequence[TokenSeq], chunk_size: int = 256) -> List[float]:
        """Same values as forward() per element; padding/chunking only affects throughput."""
        if not seqs:
            return []
        for s in seqs:
            self._validate(s)
        order = sorted(range(len(seqs)), key=lambda i: len(seqs[i]))
        out = np.empty(len(seqs))
        for start in range(0, len(order), chunk_size):
            idx = order[start:start + chunk_size]
            ids, mask = self._pad([seqs[i] for i in idx])
            z, _ = self._forward(ids, mask)
            out[idx] = sigmoid(z)
        return out.tolist()

    def attention_maps(self, seq: TokenSeq) -> List[np.ndarray]:
        """Per-layer attention weights, shape (heads, T, T)."""
        self._validate(seq)
        ids, mask = self._pad([seq])
        _, (_, caches, _, _) = self._forward(ids, mask)
        return [c[1][4][0] for c in caches]

    def grad_check(self, pairs: Sequence[Tuple[TokenSeq, int]], eps: float = 1e-6) -> float:
        return check_gradients(self.params, lambda: self.loss_and_grads(pairs), eps)

    # -----------------------------
    # Persistence
    # -----------------------------
    def save(self, path) -> None:
        save_checkpoint(path, self.params, {
            "family": FAMILY,
            "preset": self.preset,
            "config": self.cfg.model_dump(),
            "vocab_hash": self.vocab_hash,
            "threshold": self.threshold,
        })

    @classmethod
    def load(cls, path, vocab: Optional[Vocab] = None) -> "CrossEncoderModel":
        meta, params = load_checkpoint(path, vocab)
        model = cls(CrossEncoderConfig(**meta["config"]), vocab_hash=meta.get("vocab_hash", ""))
        model.params = params
        model.threshold = float(meta.get("threshold", 0.5))
        return model


# -----------------------------
# Training
# -----------------------------
def train(model: CrossEncoderModel, pairs: Sequence[Tuple[TokenSeq, int]], cfg: CrossTrainConfig) -> CrossTrainResult:
    """Adam on mean BCE; per-epoch mean loss; deterministic for a fixed seed."""
    if any(lbl not in (0, 1) for _, lbl in pairs):
        raise SequenceError("cross-encoder labels must be 0 or 1")
    rng = np.random.default_rng(cfg.seed)
    opt = Adam(cfg.lr)
    pairs = list(pairs)
    model.threshold = cfg.threshold
    result = CrossTrainResult(model=model)

    for epoch in range(cfg.epochs):
        order = rng.permutation(len(pairs))
        total = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = [pairs[i] for i in order[start:start + cfg.batch_size]]
            loss, grads = model.loss_and_grads(batch)
            if not math.isfinite(loss):
                raise TrainingDivergedError(epoch, loss)
            opt.step(model.params, grads)
            total += loss * len(batch)
        epoch_loss = total / max(1, len(pairs))
        if not all_finite(model.params):
            raise TrainingDivergedError(epoch, epoch_loss)
        result.losses.append(epoch_loss)
        logger.info("cross-encoder[%s] epoch %d/%d loss=%.5f", model.preset, epoch + 1, cfg.epochs, epoch_loss)
    return result
