from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

from app.bias_sim.records import Pair, RelevanceJudgment
from app.bias_sim.world import World
from app.evaluation.metrics import (
    ConfusionCounts,
    ModelRow,
    Prediction,
    confusion,
    fn_length_breakdown,
    head_tail_breakdown,
    predictions_from_scores,
    prf1,
)
from app.evaluation.report import EvalReport
from app.scoring.base import RelevanceScorer


@dataclass
class ScorerEval:
    name: str
    row: ModelRow
    counts: ConfusionCounts
    fn_by_length: Dict[int, int]
    fn_head_tail: Dict[str, int]
    preds: List[Prediction]


def evaluate_scorer(name: str, scorer: RelevanceScorer, world: World,
                    judgments: Sequence[RelevanceJudgment]) -> ScorerEval:
    """Alignment of one scorer's pass/fail decisions with the Search judgments."""
    pairs: List[Pair] = [j.pair for j in judgments]
    scores = scorer.score_pairs(world.catalog.items, world.catalog.keyphrases, pairs)
    preds = predictions_from_scores(pairs, scores, scorer.threshold)
    counts = confusion(preds, judgments)
    return ScorerEval(
        name=name,
        row=ModelRow.from_report(name, prf1(counts)),
        counts=counts,
        fn_by_length=fn_length_breakdown(preds, judgments, world.catalog.keyphrases),
        fn_head_tail=head_tail_breakdown(preds, judgments, world.is_head),
        preds=preds,
    )


def add_to_report(report: EvalReport, ev: ScorerEval, row: Optional[ModelRow] = None) -> None:
    report.rows.append(row or ev.row)
    report.confusion[ev.name] = ev.counts
    report.fn_by_length[ev.name] = ev.fn_by_length
    report.fn_head_tail[ev.name] = ev.fn_head_tail
