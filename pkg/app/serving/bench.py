from __future__ import annotations

import logging
import statistics
import time
from typing import List, Literal

import numpy as np
from pydantic import BaseModel, ValidationError

from app.bias_sim.config import SimConfig
from app.bias_sim.world import gen_catalog
from app.encoders.bi_encoder import BiEncoderModel
from app.encoders.cross_encoder import CrossEncoderModel
from app.errors import ConfigError
from app.scoring.base import Pair, RelevanceScorer
from app.scoring.bi import BiEncoderScorer
from app.scoring.cross import CrossEncoderScorer
from app.text_core.catalog import Catalog
from app.text_core.vocab import build_vocab

logger = logging.getLogger(__name__)

Family = Literal["bi", "cross"]
MIN_REPEATS = 3


class BenchReport(BaseModel):
    family: str
    n_items: int
    n_keyphrases: int
    n_pairs: int
    encodes: int
    forwards: int
    wall_ms: float  # median over repeats
    pairs_per_sec: float
    samples_ms: List[float]


def _workload(n_items: int, n_keyphrases: int, n_pairs: int, seed: int):
    if not max(n_items, n_keyphrases) <= n_pairs <= n_items * n_keyphrases:
        raise ConfigError(f"n_pairs={n_pairs} must lie in [{max(n_items, n_keyphrases)}, {n_items * n_keyphrases}]")
    try:
        cfg = SimConfig(n_items=n_items, n_keyphrases=n_keyphrases, n_topics=min(6, n_keyphrases), seed=seed)
    except ValidationError as e:
        raise ConfigError(f"bench workload: {e}") from e
    items, kps, _ = gen_catalog(cfg)
    catalog = Catalog(items, kps)
    # every item and keyphrase appears at least once, the rest is a random fill
    cover = {i * n_keyphrases + (i % n_keyphrases) for i in range(n_items)}
    cover |= {(k % n_items) * n_keyphrases + k for k in range(n_keyphrases)}
    rng = np.random.default_rng([seed, 7])
    rest = np.setdiff1d(np.arange(n_items * n_keyphrases), np.fromiter(cover, dtype=np.int64))
    fill = rng.choice(rest, size=n_pairs - len(cover), replace=False)
    flat = np.sort(np.concatenate([np.fromiter(cover, dtype=np.int64), fill]))
    pairs: List[Pair] = [(int(f // n_keyphrases), int(f % n_keyphrases)) for f in flat]
    return catalog, pairs


def _scorer(family: Family, catalog: Catalog, preset: str, seed: int) -> RelevanceScorer:
    vocab = build_vocab(catalog.texts())
    if family == "bi":
        return BiEncoderScorer(BiEncoderModel(len(vocab), seed=seed, vocab_hash=vocab.fingerprint()), vocab)
    if family == "cross":
        return CrossEncoderScorer(CrossEncoderModel.from_preset(preset, vocab, seed=seed), vocab)
    raise ConfigError(f"unknown model family {family!r}")


def bench_throughput(
    family: Family,
    n_items: int,
    n_keyphrases: int,
    n_pairs: int,
    repeats: int = 3,
    preset: str = "tiny",
    seed: int = 0,
) -> BenchReport:
    """Median wall time over ``repeats`` runs; call counts come from the last run and are exact."""
    if repeats < MIN_REPEATS:
        raise ConfigError(f"repeats must be >= {MIN_REPEATS}")
    catalog, pairs = _workload(n_items, n_keyphrases, n_pairs, seed)
    scorer = _scorer(family, catalog, preset, seed)
    samples: List[float] = []
    for _ in range(repeats):
        scorer.reset_counters()
        t0 = time.perf_counter()
        scorer.score_pairs(catalog.items, catalog.keyphrases, pairs)
        samples.append((time.perf_counter() - t0) * 1000.0)
    wall = statistics.median(samples)
    report = BenchReport(
        family=family,
        n_items=n_items,
        n_keyphrases=n_keyphrases,
        n_pairs=n_pairs,
        encodes=scorer.encode_calls,
        forwards=scorer.forward_calls,
        wall_ms=wall,
        pairs_per_sec=n_pairs / (wall / 1000.0) if wall > 0 else float("inf"),
        samples_ms=samples,
    )
    logger.info("bench %s: %d pairs, median %.1f ms, encodes=%d forwards=%d",
                family, n_pairs, wall, report.encodes, report.forwards)
    return report
