import statistics

import pytest

from app.bias_sim.simulation import run_simulation
from app.config import load_run_config
from app.encoders.bi_encoder import calibrate_threshold
from app.errors import ConfigError
from app.experiments import CLICK_ROW, JUDGMENT_ROW, TABLE_ROWS, run_bias_study, run_table
from app.experiments.training import (
    CALIBRATION_FRACTION,
    calibration_split,
    examples_for,
    train_bi_scorer,
    world_vocab,
)

FAST = [
    ("sim.n_items", 80), ("sim.n_keyphrases", 24), ("sim.n_topics", 3),
    ("bi.epochs", 2), ("bi.dim", 16), ("experiment.max_train_pairs", 400),
    ("experiment.timing_pairs", 300),
]


def _cfg(seed=1, extra=()):
    return load_run_config(overrides=FAST + list(extra), seed=seed)


# -------------------------------------------------------------------------------------------------
# Label source study
# -------------------------------------------------------------------------------------------------

class TestBiasStudy:
    def test_report_shape(self):
        cfg = _cfg(extra=[("model.family", "bi"), ("model.objective", "contrastive")])
        sim = run_simulation(cfg.sim)
        report = run_bias_study(cfg, sim)
        assert [r.model for r in report.rows] == [JUDGMENT_ROW, CLICK_ROW]
        gap = report.row(JUDGMENT_ROW).f1 - report.row(CLICK_ROW).f1
        assert report.notes["f1_gap"] == pytest.approx(gap)
        assert report.notes["middleman_bias"]["oracle_fail_fraction"] == 0.0
        for row in (JUDGMENT_ROW, CLICK_ROW):
            assert report.confusion[row].total == len(sim.eval_judgments)
            assert sum(report.notes[f"quadrants:{row}"].values()) == len(sim.eval_judgments)

    def test_needs_trainable_family(self):
        cfg = _cfg(extra=[("model.family", "jaccard")])
        with pytest.raises(ConfigError):
            run_bias_study(cfg)

    @pytest.mark.slow
    def test_judgments_beat_clicks(self):
        gaps = []
        for seed in (0, 1, 2):
            cfg = load_run_config(overrides=[
                ("sim.n_items", 2000), ("sim.n_keyphrases", 500), ("sim.search_noise", 0.1),
                ("model.family", "cross"), ("model.preset", "tiny"),
            ], seed=seed)
            gaps.append(run_bias_study(cfg).notes["f1_gap"])
        assert statistics.median(gaps) >= 0.05


# -------------------------------------------------------------------------------------------------
# Model table
# -------------------------------------------------------------------------------------------------

class TestTable:
    def test_selected_rows_with_timings(self):
        cfg = _cfg(extra=[("eval.min_f1", 0.0)])
        report = run_table(cfg, rows=["jaccard", "bi-contrastive"])
        assert [r.model for r in report.rows] == ["bi-contrastive", "jaccard"]
        for r in report.rows:
            assert r.diff_seconds is not None and r.diff_seconds >= 0.0
            assert r.full_seconds is not None and r.full_seconds >= 0.0
        assert set(report.gate) == {"bi-contrastive", "jaccard"}
        assert report.selected in {"bi-contrastive", "jaccard"}
        assert set(report.notes["diff_seconds"]) == {"bi-contrastive", "jaccard"}

    def test_tiny_budget_selects_nothing(self):
        cfg = _cfg(extra=[("eval.diff_budget_seconds", 1e-12)])
        report = run_table(cfg, rows=["bi-softmax"])
        assert report.selected is None

    def test_unknown_row(self):
        with pytest.raises(ConfigError):
            run_table(_cfg(), rows=["gpt"])

    def test_row_catalogue(self):
        names = [r[0] for r in TABLE_ROWS]
        assert names[-1] == "jaccard"
        assert {"bi-softmax", "bi-irns", "bi-contrastive", "cross-tiny", "cross-mini"} <= set(names)

    @pytest.mark.slow
    def test_models_beat_jaccard(self):
        margins = {"bi-contrastive": [], "cross-tiny": [], "cross-mini": []}
        cross_vs_bi = []
        for seed in (0, 1, 2):
            report = run_table(load_run_config(seed=seed),
                               rows=["bi-contrastive", "cross-tiny", "cross-mini", "jaccard"])
            base = report.row("jaccard").f1
            for name in margins:
                margins[name].append(report.row(name).f1 - base)
            cross_vs_bi.append(report.row("cross-tiny").f1 - report.row("bi-contrastive").f1)
        for name, values in margins.items():
            assert statistics.median(values) >= 0.05, name
        assert statistics.median(cross_vs_bi) >= -0.02

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_cross_recovers_short_keyphrases(self, seed):
        report = run_table(load_run_config(seed=seed), rows=["cross-tiny", "jaccard"])
        jaccard_short = report.fn_by_length["jaccard"].get(1, 0)
        assert jaccard_short > 0
        assert report.fn_by_length["cross-tiny"].get(1, 0) < jaccard_short


# -------------------------------------------------------------------------------------------------
# Threshold calibration
# -------------------------------------------------------------------------------------------------

class TestCalibrationSplit:
    EXAMPLES = [((i, i % 7), int(i % 3 == 0)) for i in range(60)]

    def test_disjoint_and_complete(self):
        fit, held = calibration_split(self.EXAMPLES, 0.2, seed=3)
        assert not set(fit) & set(held)
        assert sorted(fit + held) == sorted(self.EXAMPLES)
        assert {y for _, y in held} == {0, 1}
        assert len(held) == 12

    def test_seeded(self):
        assert calibration_split(self.EXAMPLES, 0.2, seed=3) == calibration_split(self.EXAMPLES, 0.2, seed=3)
        assert calibration_split(self.EXAMPLES, 0.2, seed=3) != calibration_split(self.EXAMPLES, 0.2, seed=4)

    def test_singleton_label_stays_in_fit(self):
        fit, held = calibration_split([((1, 1), 1), ((2, 2), 0), ((3, 3), 0)], 0.5, seed=0)
        assert ((1, 1), 1) in fit
        assert len(held) == 1

    def test_threshold_comes_from_held_out_examples(self):
        cfg = _cfg(extra=[("bi.objective", "contrastive")])
        sim = run_simulation(cfg.sim)
        catalog = sim.world.catalog
        examples = examples_for(sim, "judgments", 1, cfg.experiment.max_train_pairs, cfg.seed)
        scorer = train_bi_scorer(examples, catalog, world_vocab(catalog), cfg.bi, cfg.text.max_len)

        _, held = calibration_split(examples, CALIBRATION_FRACTION, cfg.bi.seed)
        scores = scorer.score_pairs(catalog.items, catalog.keyphrases, [p for p, _ in held])
        assert scorer.model.threshold == calibrate_threshold(scores, [y for _, y in held])
