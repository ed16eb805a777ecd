from __future__ import annotations

import hashlib
from typing import Mapping, Sequence

import numpy as np

from app.jaccard_filter.jaccard import JaccardConfig, item_token_set, jaccard_index
from app.scoring.base import Pair, RelevanceScorer, resolve
from app.text_core.catalog import ItemDoc, Keyphrase
from app.text_core.tokenizer import tokenize


class JaccardScorer(RelevanceScorer):
    family = "jaccard"

    def __init__(self, cfg: JaccardConfig) -> None:
        super().__init__()
        self.cfg = cfg
        self.name = f"jaccard-{cfg.threshold:g}"

    @property
    def model_version(self) -> str:
        raw = self.cfg.model_dump_json().encode()
        return f"jaccard-{hashlib.sha256(raw).hexdigest()[:12]}"

    @property
    def threshold(self) -> float:
        return self.cfg.threshold

    def score_pairs(
        self,
        items: Mapping[int, ItemDoc],
        keyphrases: Mapping[int, Keyphrase],
        pairs: Sequence[Pair],
    ) -> np.ndarray:
        resolve(items, keyphrases, pairs)
        self.forward_calls += len(pairs)
        item_sets = {i: item_token_set(items[i], self.cfg.use_category_tokens) for i in {i for i, _ in pairs}}
        kp_sets = {k: frozenset(tokenize(keyphrases[k].text)) for k in {k for _, k in pairs}}
        return np.array([jaccard_index(item_sets[i], kp_sets[k]) for i, k in pairs], dtype=np.float64)
