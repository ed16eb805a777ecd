from __future__ import annotations

import logging
from typing import Dict, List, Sequence, Tuple

import numpy as np

from app.bias_sim.config import SimConfig
from app.bias_sim.records import ClickLogRecord, Pair, RelevanceJudgment
from app.bias_sim.world import World

logger = logging.getLogger(__name__)


def passes_click_filter(rec: ClickLogRecord, cfg: SimConfig) -> bool:
    return (
        rec.clicks >= cfg.min_clicks
        and rec.impressions >= cfg.min_impressions
        and rec.clicks / rec.impressions >= cfg.min_ctr
    )


def derive_click_dataset(log: Sequence[ClickLogRecord], cfg: SimConfig) -> List[ClickLogRecord]:
    """Positives only: enough clicks, enough impressions, and a CTR above the floor."""
    kept = [r for r in log if passes_click_filter(r, cfg)]
    logger.info("click dataset: kept %d of %d log records", len(kept), len(log))
    return kept


def derive_judgment_dataset(world: World, pairs: Sequence[Pair]) -> List[RelevanceJudgment]:
    """
    Search labels for a category-stratified sample of ``pairs``. Each topic's
    quota follows its share of keyphrase traffic, never below
    ``judgment_topic_floor`` (capped by what the topic has available).
    """
    cfg = world.cfg
    rng = np.random.default_rng([cfg.seed, 4])
    by_topic: Dict[int, List[Pair]] = {}
    for pair in sorted(set(pairs)):
        by_topic.setdefault(world.topic_of_item(pair[0]), []).append(pair)

    budget = cfg.judgment_sample_size or sum(len(v) for v in by_topic.values())
    share = world.topic_traffic()
    share = share / share.sum() if share.sum() > 0 else np.full(len(share), 1.0 / len(share))

    chosen: List[Pair] = []
    for topic in sorted(by_topic):
        avail = by_topic[topic]
        quota = max(cfg.judgment_topic_floor, int(round(share[topic] * budget)))
        quota = min(quota, len(avail))
        idx = np.sort(rng.choice(len(avail), size=quota, replace=False))
        chosen.extend(avail[int(i)] for i in idx)

    out = [RelevanceJudgment(item_id=i, keyphrase_id=k, label=world.oracle.label(i, k)) for i, k in sorted(chosen)]
    logger.info("judgment dataset: %d pairs over %d topics (%d positive)",
                len(out), len(by_topic), sum(j.label for j in out))
    return out


def split_judgments(
    judgments: Sequence[RelevanceJudgment], eval_fraction: float, seed: int
) -> Tuple[List[RelevanceJudgment], List[RelevanceJudgment]]:
    """Train/eval split, disjoint by pair. Returns (train, eval), each sorted by pair."""
    unique: Dict[Pair, RelevanceJudgment] = {}
    for j in judgments:
        unique.setdefault(j.pair, j)
    keys = sorted(unique)
    rng = np.random.default_rng([seed, 5])
    order = rng.permutation(len(keys))
    n_eval = int(round(eval_fraction * len(keys)))
    if len(keys) > 1:
        n_eval = min(max(1, n_eval), len(keys) - 1)
    eval_keys = {keys[int(i)] for i in order[:n_eval]}
    train = [unique[k] for k in keys if k not in eval_keys]
    held = [unique[k] for k in keys if k in eval_keys]
    return train, held
