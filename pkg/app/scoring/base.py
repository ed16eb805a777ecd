from dataclasses import dataclass
from typing import List, Mapping, Sequence, Tuple

import numpy as np

from app.errors import DataError
from app.text_core.catalog import ItemDoc, Keyphrase

Pair = Tuple[int, int]


@dataclass(frozen=True)
class PairScore:
    item_id: int
    keyphrase_id: int
    score: float
    passed: bool


class RelevanceScorer:
    """
    Scores (item, keyphrase) pairs. Batch, NRT and bench all go through
    ``score_pairs`` so every path yields the same number for the same pair.
    """

    name: str
    family: str

    def __init__(self) -> None:
        self.encode_calls = 0
        self.forward_calls = 0

    @property
    def model_version(self) -> str:
        raise NotImplementedError

    @property
    def threshold(self) -> float:
        raise NotImplementedError

    def reset_counters(self) -> None:
        self.encode_calls = 0
        self.forward_calls = 0

    def score_pairs(
        self,
        items: Mapping[int, ItemDoc],
        keyphrases: Mapping[int, Keyphrase],
        pairs: Sequence[Pair],
    ) -> np.ndarray:
        raise NotImplementedError

    def decide(
        self,
        items: Mapping[int, ItemDoc],
        keyphrases: Mapping[int, Keyphrase],
        pairs: Sequence[Pair],
    ) -> List[PairScore]:
        scores = self.score_pairs(items, keyphrases, pairs)
        t = self.threshold
        return [PairScore(i, k, float(s), bool(s >= t)) for (i, k), s in zip(pairs, scores)]


def resolve(items: Mapping[int, ItemDoc], keyphrases: Mapping[int, Keyphrase], pairs: Sequence[Pair]) -> None:
    for item_id, kp_id in pairs:
        if item_id not in items:
            raise DataError(f"unknown item_id {item_id}")
        if kp_id not in keyphrases:
            raise DataError(f"unknown keyphrase_id {kp_id}")
