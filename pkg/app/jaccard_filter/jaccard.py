from __future__ import annotations

from dataclasses import dataclass
from typing import AbstractSet, List, Sequence

from pydantic import BaseModel, ConfigDict, Field

from app.text_core.catalog import ItemDoc, Keyphrase
from app.text_core.tokenizer import tokenize


class JaccardConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    # No production threshold is published; 0.3 is the experiment default.
    threshold: float = Field(default=0.3, ge=0.0, le=1.0)
    use_category_tokens: bool = False


@dataclass(frozen=True)
class JaccardDecision:
    keyphrase_id: int
    score: float
    passed: bool


def jaccard_index(a: AbstractSet[str], b: AbstractSet[str]) -> float:
    """|a ∩ b| / |a ∪ b|, and 0.0 when both sets are empty."""
    union = len(a | b)
    if union == 0:
        return 0.0
    return len(a & b) / union


def item_token_set(item: ItemDoc, use_category_tokens: bool = False) -> frozenset:
    tokens = set(tokenize(item.title))
    if use_category_tokens:
        tokens.update(tokenize(item.category_name))
    return frozenset(tokens)


def jaccard_filter(item: ItemDoc, kps: Sequence[Keyphrase], cfg: JaccardConfig) -> List[JaccardDecision]:
    """Score each keyphrase against the item title; input order is preserved."""
    item_tokens = item_token_set(item, cfg.use_category_tokens)
    out: List[JaccardDecision] = []
    for kp in kps:
        score = jaccard_index(item_tokens, frozenset(tokenize(kp.text)))
        out.append(JaccardDecision(kp.keyphrase_id, score, score >= cfg.threshold))
    return out
