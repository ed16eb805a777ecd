"""
Two-tower encoder: item embedding u and keyphrase embedding v from a shared
mean-pooled embedding matrix, trained under one of three objectives.

- contrastive: L = y·D² + (1-y)·max(0, m-D)², D = ‖u-v‖, on L2-normalized u, v
- softmax:     cross-entropy of a 2-way head over (u, v, |u-v|), raw mean pooling
- irns:        in-batch negatives, logits u_i·v_j / τ with the diagonal as the target
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.encoders.checkpoint import load_checkpoint, params_fingerprint, save_checkpoint
from app.encoders.params import (
    ParamSet,
    all_finite,
    check_gradients,
    log_softmax,
    make_optimizer,
    softmax,
)
from app.errors import EmptyInputError, ObjectiveMismatchError, TrainingDivergedError
from app.text_core.sequences import TokenSeq
from app.text_core.vocab import Vocab

logger = logging.getLogger(__name__)

Objective = Literal["contrastive", "softmax", "irns"]
FAMILY = "bi"
_NORM_FLOOR = 1e-12


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    objective: Objective = "contrastive"
    epochs: int = Field(default=4, ge=1)
    lr: float = Field(default=0.05, gt=0)
    batch_size: int = Field(default=32, ge=1)
    margin: float = Field(default=0.5, gt=0)
    temperature: float = Field(default=0.1, gt=0)
    optimizer: Literal["sgd", "adam"] = "sgd"
    dim: int = Field(default=64, ge=1)
    init_scale: float = Field(default=0.1, gt=0)
    seed: int = 0


# Reference values for full-size runs; desk-scale defaults above.
FULL_SCALE_TRAIN = {"epochs": 4, "lr": 2e-5}


@dataclass(frozen=True)
class LabeledPair:
    item_seq: TokenSeq
    kp_seq: TokenSeq
    label: int


@dataclass(frozen=True)
class PositivePair:
    """Click-derived positive; IRNS builds its negatives from the rest of the batch."""
    item_seq: TokenSeq
    kp_seq: TokenSeq


TrainPair = Union[LabeledPair, PositivePair]


@dataclass
class TrainResult:
    model: "BiEncoderModel"
    losses: List[float] = field(default_factory=list)


class BiEncoderModel:
    def __init__(
        self,
        vocab_size: int,
        dim: int = 64,
        objective: Objective = "contrastive",
        seed: int = 0,
        init_scale: float = 0.1,
        margin: float = 0.5,
        temperature: float = 0.1,
        vocab_hash: str = "",
    ) -> None:
        rng = np.random.default_rng(seed)
        self.objective: Objective = objective
        self.dim = dim
        self.seed = seed
        self.margin = margin
        self.temperature = temperature
        self.vocab_hash = vocab_hash
        self.threshold = 0.5
        self.params: ParamSet = {"E": rng.normal(0.0, init_scale, size=(vocab_size, dim))}
        if objective == "softmax":
            self.params["W"] = rng.normal(0.0, 1.0 / math.sqrt(3 * dim), size=(3 * dim, 2))
            self.params["b"] = np.zeros(2)

    @classmethod
    def from_config(cls, vocab: Vocab, cfg: TrainConfig) -> "BiEncoderModel":
        return cls(
            len(vocab),
            dim=cfg.dim,
            objective=cfg.objective,
            seed=cfg.seed,
            init_scale=cfg.init_scale,
            margin=cfg.margin,
            temperature=cfg.temperature,
            vocab_hash=vocab.fingerprint(),
        )

    @property
    def normalized(self) -> bool:
        return self.objective in ("contrastive", "irns")

    @property
    def vocab_size(self) -> int:
        return int(self.params["E"].shape[0])

    @property
    def model_version(self) -> str:
        return params_fingerprint(FAMILY, self.params, {"objective": self.objective, "threshold": self.threshold})

    # -----------------------------
    # Forward
    # -----------------------------
    def _pool(self, seqs: Sequence[TokenSeq]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        lengths = np.fromiter((len(s) for s in seqs), dtype=np.int64, count=len(seqs))
        if len(seqs) == 0:
            return np.zeros((0, self.dim)), np.zeros(0, dtype=np.int64), lengths
        if np.any(lengths == 0):
            raise EmptyInputError("empty input")
        ids = np.fromiter((t for s in seqs for t in s), dtype=np.int64, count=int(lengths.sum()))
        offsets = np.concatenate(([0], np.cumsum(lengths)[:-1]))
        sums = np.add.reduceat(self.params["E"][ids], offsets, axis=0)
        return sums / lengths[:, None], ids, lengths

    def _encode_with_cache(self, seqs: Sequence[TokenSeq]):
        z, ids, lengths = self._pool(seqs)
        if not self.normalized:
            return z, (ids, lengths, None, None)
        norms = np.maximum(np.linalg.norm(z, axis=1, keepdims=True), _NORM_FLOOR)
        u = z / norms
        return u, (ids, lengths, u, norms)

    def encode_batch(self, seqs: Sequence[TokenSeq]) -> np.ndarray:
        return self._encode_with_cache(seqs)[0]

    def encode(self, seq: TokenSeq) -> np.ndarray:
        if len(seq) == 0:
            raise EmptyInputError("empty input")
        return self.encode_batch([seq])[0]

    def score_vectors(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Row-wise pair scores in [0, 1] from already-encoded vectors."""
        u = np.atleast_2d(u)
        v = np.atleast_2d(v)
        if self.normalized:
            cos = np.einsum("ij,ij->i", u, v)
            return np.clip((cos + 1.0) / 2.0, 0.0, 1.0)
        h = np.concatenate([u, v, np.abs(u - v)], axis=1)
        probs = softmax(h @ self.params["W"] + self.params["b"], axis=1)
        return probs[:, 1]

    def score_pair(self, item_seq: TokenSeq, kp_seq: TokenSeq) -> float:
        u = self.encode(item_seq)
        v = self.encode(kp_seq)
        return float(self.score_vectors(u, v)[0])

    # -----------------------------
    # Backward
    # -----------------------------
    def _backprop_encode(self, grad_out: np.ndarray, cache, dE: np.ndarray) -> None:
        ids, lengths, u, norms = cache
        if u is not None:
            dot = np.sum(grad_out * u, axis=1, keepdims=True)
            grad_z = (grad_out - u * dot) / norms
        else:
            grad_z = grad_out
        per_token = np.repeat(grad_z / lengths[:, None], lengths, axis=0)
        np.add.at(dE, ids, per_token)

    def loss_and_grads(self, batch: Sequence[TrainPair]) -> Tuple[float, ParamSet]:
        _check_objective(self.objective, batch)
        U, cache_u = self._encode_with_cache([p.item_seq for p in batch])
        V, cache_v = self._encode_with_cache([p.kp_seq for p in batch])
        grads: ParamSet = {"E": np.zeros_like(self.params["E"])}

        if self.objective == "contrastive":
            y = np.array([p.label for p in batch], dtype=np.float64)
            loss, dU, dV = contrastive_loss(U, V, y, self.margin)
        elif self.objective == "irns":
            loss, dU, dV = irns_loss(U, V, self.temperature)
        else:
            y = np.array([p.label for p in batch], dtype=np.int64)
            loss, dU, dV, dW, db = softmax_head_loss(U, V, y, self.params["W"], self.params["b"])
            grads["W"] = dW
            grads["b"] = db

        self._backprop_encode(dU, cache_u, grads["E"])
        self._backprop_encode(dV, cache_v, grads["E"])
        return loss, grads

    def grad_check(self, batch: Sequence[TrainPair], eps: float = 1e-6) -> float:
        """Max relative error of analytic vs central-difference gradients over every parameter."""
        return check_gradients(self.params, lambda: self.loss_and_grads(batch), eps)

    # -----------------------------
    # Persistence
    # -----------------------------
    def save(self, path) -> None:
        save_checkpoint(path, self.params, {
            "family": FAMILY,
            "objective": self.objective,
            "dim": self.dim,
            "vocab_size": self.vocab_size,
            "vocab_hash": self.vocab_hash,
            "threshold": self.threshold,
            "margin": self.margin,
            "temperature": self.temperature,
            "seed": self.seed,
        })

    @classmethod
    def load(cls, path, vocab: Optional[Vocab] = None) -> "BiEncoderModel":
        meta, params = load_checkpoint(path, vocab)
        model = cls(
            int(meta["vocab_size"]),
            dim=int(meta["dim"]),
            objective=meta["objective"],
            seed=int(meta.get("seed", 0)),
            margin=float(meta.get("margin", 0.5)),
            temperature=float(meta.get("temperature", 0.1)),
            vocab_hash=meta.get("vocab_hash", ""),
        )
        model.params = params
        model.threshold = float(meta.get("threshold", 0.5))
        return model


# -----------------------------
# Objectives (batch means)
# -----------------------------
def contrastive_loss(U: np.ndarray, V: np.ndarray, y: np.ndarray, margin: float):
    diff = U - V
    D = np.linalg.norm(diff, axis=1)
    hinge = np.maximum(0.0, margin - D)
    per_pair = y * D ** 2 + (1.0 - y) * hinge ** 2
    n = len(y)
    safe_D = np.where(D > _NORM_FLOOR, D, 1.0)
    neg_coef = np.where((hinge > 0) & (D > _NORM_FLOOR), -2.0 * hinge / safe_D, 0.0)
    coef = y * 2.0 + (1.0 - y) * neg_coef
    g = coef[:, None] * diff / n
    return float(per_pair.mean()), g, -g


def irns_loss(U: np.ndarray, V: np.ndarray, temperature: float):
    n = len(U)
    logits = (U @ V.T) / temperature
    logp = log_softmax(logits, axis=1)
    loss = -float(np.mean(np.diag(logp)))
    dlogits = (np.exp(logp) - np.eye(n)) / n
    dU = dlogits @ V / temperature
    dV = dlogits.T @ U / temperature
    return loss, dU, dV


def softmax_head_loss(U: np.ndarray, V: np.ndarray, y: np.ndarray, W: np.ndarray, b: np.ndarray):
    n, d = U.shape
    diff = U - V
    h = np.concatenate([U, V, np.abs(diff)], axis=1)
    logp = log_softmax(h @ W + b, axis=1)
    loss = -float(np.mean(logp[np.arange(n), y]))
    dlogits = np.exp(logp)
    dlogits[np.arange(n), y] -= 1.0
    dlogits /= n
    dW = h.T @ dlogits
    db = dlogits.sum(axis=0)
    dh = dlogits @ W.T
    sign = np.sign(diff)
    dU = dh[:, :d] + sign * dh[:, 2 * d:]
    dV = dh[:, d:2 * d] - sign * dh[:, 2 * d:]
    return loss, dU, dV, dW, db


def _check_objective(objective: str, batch: Sequence[TrainPair]) -> None:
    if objective == "irns":
        if any(not isinstance(p, PositivePair) for p in batch):
            raise ObjectiveMismatchError("irns trains on positives only (PositivePair), got labeled pairs")
    else:
        if any(not isinstance(p, LabeledPair) for p in batch):
            raise ObjectiveMismatchError(f"{objective} needs labeled pairs (LabeledPair)")
        if any(p.label not in (0, 1) for p in batch):
            raise ObjectiveMismatchError("labels must be 0 or 1")


# -----------------------------
# Training
# -----------------------------
def train(model: BiEncoderModel, data: Sequence[TrainPair], cfg: TrainConfig) -> TrainResult:
    """Mini-batch descent; one mean loss per epoch; deterministic for a fixed seed."""
    if cfg.objective != model.objective:
        raise ObjectiveMismatchError(f"config objective {cfg.objective} != model objective {model.objective}")
    _check_objective(model.objective, data)
    model.margin = cfg.margin
    model.temperature = cfg.temperature

    rng = np.random.default_rng(cfg.seed)
    opt = make_optimizer(cfg.optimizer, cfg.lr)
    data = list(data)
    result = TrainResult(model=model)

    for epoch in range(cfg.epochs):
        order = rng.permutation(len(data))
        total = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = [data[i] for i in order[start:start + cfg.batch_size]]
            loss, grads = model.loss_and_grads(batch)
            if not math.isfinite(loss):
                raise TrainingDivergedError(epoch, loss)
            opt.step(model.params, grads)
            total += loss * len(batch)
        epoch_loss = total / max(1, len(data))
        if not math.isfinite(epoch_loss) or not all_finite(model.params):
            raise TrainingDivergedError(epoch, epoch_loss)
        result.losses.append(epoch_loss)
        logger.info("bi-encoder[%s] epoch %d/%d loss=%.5f", model.objective, epoch + 1, cfg.epochs, epoch_loss)
    return result


def calibrate_threshold(scores: Sequence[float], labels: Sequence[int]) -> float:
    """F1-maximizing pass threshold over the observed scores (ties -> lower threshold)."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if len(s) == 0 or y.sum() == 0:
        return 0.5
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    tp = np.cumsum(y[order])
    fp = np.cumsum(1 - y[order])
    fn = y.sum() - tp
    f1 = 2 * tp / np.maximum(1, 2 * tp + fp + fn)
    # only cut where the next score differs, so the threshold is realizable
    last_of_run = np.append(s_sorted[1:] != s_sorted[:-1], True)
    f1 = np.where(last_of_run, f1, -1.0)
    best = int(np.argmax(f1))
    return float(s_sorted[best])
