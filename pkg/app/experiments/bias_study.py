"""
Same architecture, two label sources: Search judgments versus click-derived
positives with random negatives, both scored against the Search judgments.
"""

from __future__ import annotations

import logging
from typing import Optional

from app.bias_sim.report import agreement_quadrants
from app.bias_sim.simulation import Simulation, run_simulation
from app.config import RunConfig
from app.errors import ConfigError
from app.evaluation.metrics import compare
from app.evaluation.report import EvalReport
from app.experiments.evaluate import add_to_report, evaluate_scorer
from app.experiments.training import examples_for, train_bi_scorer, train_cross_scorer, world_vocab
from app.scoring.base import RelevanceScorer

logger = logging.getLogger(__name__)

JUDGMENT_ROW = "judgment-trained"
CLICK_ROW = "click-trained"


def _train(cfg: RunConfig, sim: Simulation, labels: str) -> RelevanceScorer:
    if cfg.model.family == "jaccard":
        raise ConfigError("the label source study needs a trainable model family (bi or cross)")
    ex = examples_for(sim, labels, cfg.experiment.negatives_per_positive, cfg.experiment.max_train_pairs, cfg.seed)
    vocab = world_vocab(sim.world.catalog, cfg.text.min_freq)
    if cfg.model.family == "bi":
        return train_bi_scorer(ex, sim.world.catalog, vocab, cfg.bi.model_copy(update={"objective": cfg.model.objective}),
                               cfg.text.max_len)
    return train_cross_scorer(ex, sim.world.catalog, vocab, cfg.cross.model_copy(update={"preset": cfg.model.preset}),
                              cfg.text.max_len)


def run_bias_study(cfg: RunConfig, sim: Optional[Simulation] = None) -> EvalReport:
    sim = sim or run_simulation(cfg.sim)
    held = sim.eval_judgments
    report = EvalReport(title=f"Label source study ({cfg.model.family}, seed {cfg.seed})")

    evals = {}
    for row_name, labels in ((JUDGMENT_ROW, "judgments"), (CLICK_ROW, "clicks")):
        logger.info("bias study: training %s model", labels)
        scorer = _train(cfg, sim, labels)
        ev = evaluate_scorer(row_name, scorer, sim.world, held)
        add_to_report(report, ev)
        evals[row_name] = ev
        report.notes[f"quadrants:{row_name}"] = agreement_quadrants(
            {p: passed for p, passed in ev.preds}, sim.world
        ).model_dump()

    delta = compare(evals[CLICK_ROW].counts, evals[JUDGMENT_ROW].counts)
    report.notes["judgment_vs_click"] = delta.model_dump()
    report.notes["f1_gap"] = evals[JUDGMENT_ROW].row.f1 - evals[CLICK_ROW].row.f1
    report.notes["middleman_bias"] = sim.bias.model_dump()
    logger.info("bias study: judgment F1=%.3f click F1=%.3f",
                evals[JUDGMENT_ROW].row.f1, evals[CLICK_ROW].row.f1)
    return report
