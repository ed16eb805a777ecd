"""Full and daily-diff batch scoring into a ScoreStore."""

from __future__ import annotations

import logging
import os
import shutil
import time
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence

from app.errors import VersionMismatchError
from app.scoring.base import Pair, RelevanceScorer
from app.serving.pairs import PairSource, SameCategoryPairs
from app.serving.store import ScoreRecord, ScoreStore
from app.text_core.catalog import Catalog, ItemDoc, Keyphrase

logger = logging.getLogger(__name__)


def score_records(scorer: RelevanceScorer, catalog: Catalog, pairs: Sequence[Pair]) -> List[ScoreRecord]:
    """The one scoring path shared by full, diff and NRT."""
    if not pairs:
        return []
    scores = scorer.score_pairs(catalog.items, catalog.keyphrases, pairs)
    threshold = scorer.threshold
    version = scorer.model_version
    out: List[ScoreRecord] = []
    for (item_id, kp_id), s in zip(pairs, scores):
        ts = max(catalog.items[item_id].updated_at, catalog.keyphrases[kp_id].updated_at)
        out.append(ScoreRecord(item_id=item_id, keyphrase_id=kp_id, score=float(s), passed=bool(s >= threshold),
                               model_version=version, updated_at=ts))
    return out


def batch_score_full(
    scorer: RelevanceScorer,
    catalog: Catalog,
    pairs: Optional[Sequence[Pair]] = None,
    pair_source: Optional[PairSource] = None,
    out_dir: Optional[str] = None,
) -> ScoreStore:
    """Scores every candidate pair exactly once; writes the store to ``out_dir`` when given."""
    started = time.perf_counter()
    if pairs is None:
        pairs = (pair_source or SameCategoryPairs()).all_pairs(catalog)
    pairs = sorted(set(pairs))
    store = ScoreStore(scorer.model_version, scorer.threshold).merge(score_records(scorer, catalog, pairs))
    if out_dir is not None:
        _save_or_clean(store, out_dir)
    logger.info("full batch: %d pairs with %s in %.3fs", len(pairs), scorer.model_version,
                time.perf_counter() - started)
    return store


def _save_or_clean(store: ScoreStore, out_dir: str) -> None:
    created = not os.path.exists(out_dir)
    try:
        store.save(out_dir)
    except BaseException:
        if created:
            shutil.rmtree(out_dir, ignore_errors=True)
        raise


@dataclass
class DiffResult:
    store: ScoreStore
    catalog: Catalog
    rescored: List[Pair] = field(default_factory=list)
    deleted: int = 0


def batch_score_diff(
    store: ScoreStore,
    scorer: RelevanceScorer,
    catalog: Catalog,
    changed_items: Iterable[ItemDoc] = (),
    new_keyphrases: Iterable[Keyphrase] = (),
    pair_source: Optional[PairSource] = None,
) -> DiffResult:
    """
    Rescores only pairs touching created/revised items and new keyphrases.
    A revised entity's previous records are dropped first, so the merged store
    equals a full rebuild over the post-change catalog.
    """
    if store.model_version != scorer.model_version:
        raise VersionMismatchError(store.model_version, scorer.model_version)
    changed_items = list(changed_items)
    new_keyphrases = list(new_keyphrases)
    if not changed_items and not new_keyphrases:
        return DiffResult(store=store, catalog=catalog)

    after = catalog.copy()
    for it in changed_items:
        after.upsert_item(it)
    for kp in new_keyphrases:
        after.upsert_keyphrase(kp)
    item_ids = {it.item_id for it in changed_items}
    kp_ids = {kp.keyphrase_id for kp in new_keyphrases}

    stale = set(store.keys_for_items(item_ids)) | set(store.keys_for_keyphrases(kp_ids))
    touched = (pair_source or SameCategoryPairs()).pairs_touching(after, item_ids, kp_ids)
    merged = store.delete(stale).merge(score_records(scorer, after, touched))
    logger.info("diff batch: %d items, %d keyphrases -> %d rescored, %d stale dropped",
                len(item_ids), len(kp_ids), len(touched), len(stale))
    return DiffResult(store=merged, catalog=after, rescored=touched, deleted=len(stale))
