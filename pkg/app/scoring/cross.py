from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from app.encoders.cross_encoder import CrossEncoderModel
from app.scoring.base import Pair, RelevanceScorer, resolve
from app.text_core.catalog import ItemDoc, Keyphrase
from app.text_core.sequences import encode_cross_pair
from app.text_core.vocab import Vocab


class CrossEncoderScorer(RelevanceScorer):
    """One joint forward per pair."""

    family = "cross"

    def __init__(self, model: CrossEncoderModel, vocab: Vocab, chunk_size: int = 256) -> None:
        super().__init__()
        self.model = model
        self.vocab = vocab
        self.chunk_size = chunk_size
        self.name = f"cross-{model.preset}"

    @property
    def model_version(self) -> str:
        return self.model.model_version

    @property
    def threshold(self) -> float:
        return self.model.threshold

    def score_pairs(
        self,
        items: Mapping[int, ItemDoc],
        keyphrases: Mapping[int, Keyphrase],
        pairs: Sequence[Pair],
    ) -> np.ndarray:
        if not pairs:
            return np.zeros(0)
        resolve(items, keyphrases, pairs)
        max_len = self.model.cfg.max_seq_len
        seqs = [encode_cross_pair(keyphrases[k], items[i], self.vocab, max_len) for i, k in pairs]
        self.forward_calls += len(seqs)
        return np.asarray(self.model.predict_batch(seqs, self.chunk_size))
