from __future__ import annotations

from typing import Dict, List, Mapping, Sequence

import numpy as np

from app.encoders.bi_encoder import BiEncoderModel
from app.scoring.base import Pair, RelevanceScorer, resolve
from app.text_core.catalog import ItemDoc, Keyphrase
from app.text_core.sequences import DEFAULT_MAX_LEN, encode_bi_item, encode_keyphrase
from app.text_core.vocab import Vocab


class BiEncoderScorer(RelevanceScorer):
    """Encodes each distinct item and keyphrase once, then scores pairs by gathering rows."""

    family = "bi"

    def __init__(self, model: BiEncoderModel, vocab: Vocab, max_len: int = DEFAULT_MAX_LEN) -> None:
        super().__init__()
        self.model = model
        self.vocab = vocab
        self.max_len = max_len
        self.name = f"bi-{model.objective}"

    @property
    def model_version(self) -> str:
        return self.model.model_version

    @property
    def threshold(self) -> float:
        return self.model.threshold

    def _encode(self, docs: List[object], encode_fn) -> np.ndarray:
        self.encode_calls += len(docs)
        return self.model.encode_batch([encode_fn(d, self.vocab, self.max_len) for d in docs])

    def score_pairs(
        self,
        items: Mapping[int, ItemDoc],
        keyphrases: Mapping[int, Keyphrase],
        pairs: Sequence[Pair],
    ) -> np.ndarray:
        if not pairs:
            return np.zeros(0)
        resolve(items, keyphrases, pairs)
        item_ids = sorted({i for i, _ in pairs})
        kp_ids = sorted({k for _, k in pairs})
        U = self._encode([items[i] for i in item_ids], encode_bi_item)
        V = self._encode([keyphrases[k] for k in kp_ids], encode_keyphrase)
        urow: Dict[int, int] = {i: n for n, i in enumerate(item_ids)}
        vrow: Dict[int, int] = {k: n for n, k in enumerate(kp_ids)}
        ui = np.fromiter((urow[i] for i, _ in pairs), dtype=np.int64, count=len(pairs))
        vi = np.fromiter((vrow[k] for _, k in pairs), dtype=np.int64, count=len(pairs))
        return self.model.score_vectors(U[ui], V[vi])
