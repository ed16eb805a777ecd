"""Turns a simulated world into training data and trained scorers."""

from __future__ import annotations

import logging
from typing import List, Literal, Sequence, Set, Tuple

import numpy as np

from app.bias_sim.records import ClickLogRecord, Pair, RelevanceJudgment
from app.bias_sim.simulation import Simulation
from app.encoders import bi_encoder, cross_encoder
from app.encoders.bi_encoder import BiEncoderModel, LabeledPair, PositivePair, TrainConfig, calibrate_threshold
from app.encoders.cross_encoder import CrossEncoderModel, CrossTrainConfig
from app.errors import DataError
from app.scoring.bi import BiEncoderScorer
from app.scoring.cross import CrossEncoderScorer
from app.text_core.catalog import Catalog
from app.text_core.sequences import DEFAULT_MAX_LEN, encode_bi_item, encode_cross_pair, encode_keyphrase
from app.text_core.vocab import Vocab, build_vocab

logger = logging.getLogger(__name__)

LabelSource = Literal["judgments", "clicks"]
Labeled = List[Tuple[Pair, int]]

CALIBRATION_FRACTION = 0.2


def world_vocab(catalog: Catalog, min_freq: int = 1) -> Vocab:
    return build_vocab(catalog.texts(), min_freq=min_freq)


def judgment_examples(judgments: Sequence[RelevanceJudgment]) -> Labeled:
    return [(j.pair, j.label) for j in judgments]


def click_examples(
    clicks: Sequence[ClickLogRecord],
    catalog: Catalog,
    negatives_per_positive: int = 1,
    seed: int = 0,
) -> Labeled:
    """Click positives plus uniformly random keyphrases as negatives for the same items."""
    if not clicks:
        raise DataError("click dataset is empty; nothing to train on")
    rng = np.random.default_rng([seed, 11])
    positives: Set[Pair] = {r.pair for r in clicks}
    kp_ids = np.array(sorted(catalog.keyphrases))
    out: Labeled = [(p, 1) for p in sorted(positives)]
    for item_id, _ in sorted(positives):
        drawn = 0
        for _attempt in range(50 * negatives_per_positive):
            if drawn == negatives_per_positive:
                break
            k = int(kp_ids[int(rng.integers(len(kp_ids)))])
            if (item_id, k) not in positives:
                out.append(((item_id, k), 0))
                drawn += 1
    return out


def cap_examples(examples: Labeled, limit: int, seed: int) -> Labeled:
    if len(examples) <= limit:
        return list(examples)
    rng = np.random.default_rng([seed, 12])
    keep = np.sort(rng.choice(len(examples), size=limit, replace=False))
    return [examples[int(i)] for i in keep]


# -----------------------------
# Bi-encoder
# -----------------------------
def bi_training_data(examples: Labeled, catalog: Catalog, vocab: Vocab, objective: str,
                     max_len: int = DEFAULT_MAX_LEN):
    def seqs(pair: Pair):
        i, k = pair
        return encode_bi_item(catalog.item(i), vocab, max_len), encode_keyphrase(catalog.keyphrase(k), vocab, max_len)

    if objective == "irns":
        return [PositivePair(*seqs(p)) for p, y in examples if y == 1]
    return [LabeledPair(*seqs(p), label=y) for p, y in examples]


def calibration_split(examples: Labeled, fraction: float, seed: int) -> Tuple[Labeled, Labeled]:
    """Seeded per-label split into (fit, calibration); each label keeps at least one fit example."""
    rng = np.random.default_rng([seed, 13])
    fit: Labeled = []
    held: Labeled = []
    for label in (0, 1):
        group = [ex for ex in examples if ex[1] == label]
        n_held = int(round(fraction * len(group)))
        if len(group) > 1:
            n_held = min(max(1, n_held), len(group) - 1)
        else:
            n_held = 0
        chosen = set(int(i) for i in rng.permutation(len(group))[:n_held])
        fit.extend(ex for i, ex in enumerate(group) if i not in chosen)
        held.extend(ex for i, ex in enumerate(group) if i in chosen)
    return sorted(fit), sorted(held)


def train_bi_scorer(
    examples: Labeled,
    catalog: Catalog,
    vocab: Vocab,
    cfg: TrainConfig,
    max_len: int = DEFAULT_MAX_LEN,
    calibration_fraction: float = CALIBRATION_FRACTION,
) -> BiEncoderScorer:
    """Trains on most examples, then sets the pass threshold to the F1-best cut on the held-out rest."""
    fit, held = calibration_split(examples, calibration_fraction, cfg.seed)
    model = BiEncoderModel.from_config(vocab, cfg)
    bi_encoder.train(model, bi_training_data(fit, catalog, vocab, cfg.objective, max_len), cfg)
    scorer = BiEncoderScorer(model, vocab, max_len)
    scores = scorer.score_pairs(catalog.items, catalog.keyphrases, [p for p, _ in held])
    model.threshold = calibrate_threshold(scores, [y for _, y in held])
    scorer.reset_counters()
    logger.info("bi-encoder[%s] threshold=%.4f from %d held-out examples", cfg.objective, model.threshold, len(held))
    return scorer


# -----------------------------
# Cross-encoder
# -----------------------------
def cross_training_data(examples: Labeled, catalog: Catalog, vocab: Vocab, max_len: int = DEFAULT_MAX_LEN):
    return [
        (encode_cross_pair(catalog.keyphrase(k), catalog.item(i), vocab, max_len), y)
        for (i, k), y in examples
    ]


def train_cross_scorer(
    examples: Labeled,
    catalog: Catalog,
    vocab: Vocab,
    cfg: CrossTrainConfig,
    max_len: int = DEFAULT_MAX_LEN,
) -> CrossEncoderScorer:
    model = CrossEncoderModel.from_preset(cfg.preset, vocab, max_seq_len=max_len, seed=cfg.seed)
    cross_encoder.train(model, cross_training_data(examples, catalog, vocab, max_len), cfg)
    return CrossEncoderScorer(model, vocab)


def examples_for(sim: Simulation, labels: LabelSource, negatives_per_positive: int, limit: int, seed: int) -> Labeled:
    if labels == "judgments":
        ex = judgment_examples(sim.train_judgments)
    else:
        ex = click_examples(sim.clicks, sim.world.catalog, negatives_per_positive, seed)
    return cap_examples(ex, limit, seed)
