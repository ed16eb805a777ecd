from app.scoring.base import PairScore, RelevanceScorer
from app.scoring.bi import BiEncoderScorer
from app.scoring.cross import CrossEncoderScorer
from app.scoring.jaccard import JaccardScorer
from app.scoring.loader import load_scorer

__all__ = ["PairScore", "RelevanceScorer", "BiEncoderScorer", "CrossEncoderScorer", "JaccardScorer", "load_scorer"]
