from __future__ import annotations

from typing import Optional

from app.encoders.bi_encoder import BiEncoderModel
from app.encoders.checkpoint import load_checkpoint
from app.encoders.cross_encoder import CrossEncoderModel
from app.errors import DataError
from app.jaccard_filter.jaccard import JaccardConfig
from app.scoring.base import RelevanceScorer
from app.scoring.bi import BiEncoderScorer
from app.scoring.cross import CrossEncoderScorer
from app.scoring.jaccard import JaccardScorer
from app.text_core.vocab import Vocab

JACCARD_MODEL = "jaccard"


def load_scorer(model: str, vocab: Optional[Vocab], jaccard: Optional[JaccardConfig] = None) -> RelevanceScorer:
    """``model`` is a checkpoint path, or ``jaccard`` for the lexical baseline."""
    if model == JACCARD_MODEL:
        return JaccardScorer(jaccard or JaccardConfig())
    if vocab is None:
        raise DataError(f"{model}: a vocab is required to load a checkpoint")
    meta, _ = load_checkpoint(model, vocab)
    family = meta.get("family")
    if family == "bi":
        return BiEncoderScorer(BiEncoderModel.load(model, vocab), vocab)
    if family == "cross":
        return CrossEncoderScorer(CrossEncoderModel.load(model, vocab), vocab)
    raise DataError(f"{model}: unknown model family {family!r}")
