"""Model comparison table: alignment plus measured Diff and Full batch latencies."""

from __future__ import annotations

import logging
import time
from typing import Dict, List, Optional, Tuple

import numpy as np

from app.bias_sim.simulation import Simulation, run_simulation
from app.config import RunConfig
from app.errors import ConfigError
from app.evaluation.metrics import gate, select_model
from app.evaluation.report import EvalReport
from app.experiments.evaluate import add_to_report, evaluate_scorer
from app.experiments.training import examples_for, train_bi_scorer, train_cross_scorer, world_vocab
from app.scoring.base import RelevanceScorer
from app.scoring.jaccard import JaccardScorer
from app.serving.batch import batch_score_diff, batch_score_full
from app.serving.pairs import ExplicitPairs

logger = logging.getLogger(__name__)

# (row name, family, objective or preset, label source)
TABLE_ROWS: Tuple[Tuple[str, str, str, str], ...] = (
    ("bi-softmax", "bi", "softmax", "judgments"),
    ("bi-irns", "bi", "irns", "clicks"),
    ("bi-contrastive", "bi", "contrastive", "judgments"),
    ("cross-tiny", "cross", "tiny", "judgments"),
    ("cross-mini", "cross", "mini", "judgments"),
    ("jaccard", "jaccard", "", ""),
)


def time_batches(scorer: RelevanceScorer, sim: Simulation, cfg: RunConfig) -> Tuple[float, float]:
    """Seconds for a full build over the timing pairs, then for one diff revising a slice of their items."""
    catalog = sim.world.catalog
    pairs = sim.advertised[: cfg.experiment.timing_pairs]
    source = ExplicitPairs(pairs)

    t0 = time.perf_counter()
    store = batch_score_full(scorer, catalog, pair_source=source)
    full_s = time.perf_counter() - t0

    item_ids = sorted({i for i, _ in pairs})
    rng = np.random.default_rng([cfg.seed, 21])
    n = max(1, int(round(cfg.experiment.diff_fraction * len(item_ids))))
    revised = [catalog.item(int(i)).model_copy(update={"updated_at": 1})
               for i in rng.choice(item_ids, size=n, replace=False)]
    t0 = time.perf_counter()
    batch_score_diff(store, scorer, catalog, revised, (), source)
    diff_s = time.perf_counter() - t0
    return diff_s, full_s


def train_row(cfg: RunConfig, sim: Simulation, family: str, variant: str, labels: str) -> RelevanceScorer:
    if family == "jaccard":
        return JaccardScorer(cfg.jaccard)
    ex = examples_for(sim, labels, cfg.experiment.negatives_per_positive, cfg.experiment.max_train_pairs, cfg.seed)
    vocab = world_vocab(sim.world.catalog, cfg.text.min_freq)
    if family == "bi":
        return train_bi_scorer(ex, sim.world.catalog, vocab, cfg.bi.model_copy(update={"objective": variant}),
                               cfg.text.max_len)
    return train_cross_scorer(ex, sim.world.catalog, vocab, cfg.cross.model_copy(update={"preset": variant}),
                              cfg.text.max_len)


def run_table(cfg: RunConfig, sim: Optional[Simulation] = None,
              rows: Optional[List[str]] = None) -> EvalReport:
    sim = sim or run_simulation(cfg.sim)
    report = EvalReport(title=f"Offline alignment with Search relevance (seed {cfg.seed})")
    wanted = set(rows) if rows else None
    unknown = sorted((wanted or set()) - {r[0] for r in TABLE_ROWS})
    if unknown:
        raise ConfigError(f"unknown table rows {unknown}; choose from {[r[0] for r in TABLE_ROWS]}")
    for name, family, variant, labels in TABLE_ROWS:
        if wanted is not None and name not in wanted:
            continue
        logger.info("table: %s", name)
        scorer = train_row(cfg, sim, family, variant, labels)
        ev = evaluate_scorer(name, scorer, sim.world, sim.eval_judgments)
        diff_s, full_s = time_batches(scorer, sim, cfg)
        add_to_report(report, ev, ev.row.model_copy(update={"diff_seconds": diff_s, "full_seconds": full_s}))

    if cfg.eval.min_f1 is not None:
        report.gate = gate(report.rows, cfg.eval.min_f1)
    chosen = select_model(report.rows, cfg.eval.diff_budget_seconds)
    report.selected = chosen.model if chosen else None
    timings: Dict[str, float] = {r.model: r.diff_seconds or 0.0 for r in report.rows}
    report.notes["diff_budget_seconds"] = cfg.eval.diff_budget_seconds
    report.notes["diff_seconds"] = timings
    return report
