import numpy as np
import pytest
from pydantic import ValidationError

from app.bias_sim.config import SimConfig
from app.bias_sim.datasets import derive_click_dataset, derive_judgment_dataset, passes_click_filter, split_judgments
from app.bias_sim.records import ClickLogRecord, RelevanceJudgment
from app.bias_sim.report import agreement_quadrants
from app.bias_sim.simulation import run_simulation
from app.bias_sim.traffic import click_probability, run_auctions
from app.bias_sim.world import SearchOracle, build_world, search_oracle
from app.bias_sim.world_dir import load_judgments, load_world, save_world
from app.errors import ConfigError, DataError
from app.jaccard_filter.jaccard import item_token_set, jaccard_index
from app.text_core.tokenizer import tokenize


def _tiny(seed: int, **kw) -> SimConfig:
    return SimConfig(n_items=40, n_keyphrases=12, n_topics=3, auctions_per_keyphrase=10, seed=seed, **kw)


# -------------------------------------------------------------------------------------------------
# World and oracle
# -------------------------------------------------------------------------------------------------

class TestWorld:
    def test_same_seed_same_world(self, small_cfg, small_sim):
        again = run_simulation(small_cfg)
        assert again.advertised == small_sim.advertised
        assert again.log.records == small_sim.log.records
        assert again.judgments == small_sim.judgments
        assert again.clicks == small_sim.clicks

    def test_different_seed_differs(self, small_cfg, small_sim):
        other = run_simulation(small_cfg.model_copy(update={"seed": small_cfg.seed + 1}))
        assert other.log.records != small_sim.log.records

    def test_category_is_dominant_topic(self, small_sim):
        world = small_sim.world
        for item_id, item in world.catalog.items.items():
            assert item.category_id == world.truth.dominant_topic(item_id)
            assert item.category_name == world.topic_names[item.category_id]

    def test_relevant_pair_without_token_overlap(self, small_sim):
        world = small_sim.world
        found = False
        for item in world.catalog.items.values():
            for kp in world.catalog.keyphrases.values():
                if world.truth.relevant(item.item_id, kp.keyphrase_id) and \
                        jaccard_index(item_token_set(item), frozenset(tokenize(kp.text))) == 0.0:
                    found = True
                    break
            if found:
                break
        assert found

    def test_traffic_shares(self, small_sim):
        world = small_sim.world
        assert sum(world.traffic.values()) == pytest.approx(1.0)
        assert len(world.heads) == int(np.ceil(world.cfg.head_fraction * len(world.catalog.keyphrases)))

    def test_too_many_topics(self):
        with pytest.raises(ConfigError):
            build_world(SimConfig(n_items=50, n_keyphrases=30, n_topics=25))

    def test_config_ranges(self):
        with pytest.raises(ValidationError):
            SimConfig(title_len_min=6, title_len_max=5)
        with pytest.raises(ValidationError):
            SimConfig(n_keyphrases=3, n_topics=4)


class TestOracle:
    def test_noise_limits(self, small_sim):
        truth = small_sim.world.truth
        exact = SearchOracle(truth, 0.0, seed=1)
        flipped = SearchOracle(truth, 1.0, seed=1)
        for i in range(20):
            for k in range(10):
                rel = int(truth.relevant(i, k))
                assert exact.label(i, k) == rel
                assert flipped.label(i, k) == 1 - rel

    def test_fixed_answer_per_pair(self, small_sim):
        oracle = SearchOracle(small_sim.world.truth, 0.5, seed=9)
        first = [oracle.label(i, 0) for i in range(30)]
        fresh = SearchOracle(small_sim.world.truth, 0.5, seed=9)
        assert [fresh.label(i, 0) for i in range(30)] == first
        assert [oracle.label(i, 0) for i in range(30)] == first
        assert len(oracle._memo) == 30

    def test_unknown_ids(self, small_sim):
        with pytest.raises(DataError):
            search_oracle(small_sim.world, 10_000, 0)
        with pytest.raises(DataError):
            search_oracle(small_sim.world, 0, 10_000)


# -------------------------------------------------------------------------------------------------
# Auctions and clicks
# -------------------------------------------------------------------------------------------------

class TestAuctions:
    def test_position_decay_halves_clicks(self):
        cfg = SimConfig(position_decay=0.5, srp_slots=8)
        tally = run_auctions(list(range(8)), [True] * 8, 10_000, cfg, np.random.default_rng(0), {})
        ratio = tally.rank_clicks[1] / tally.rank_clicks[0]
        assert ratio == pytest.approx(0.5, rel=0.1)
        assert tally.impressions.sum() == 10_000 * 8 * cfg.impressions_per_auction

    def test_no_position_decay_is_flat(self):
        cfg = SimConfig(position_decay=1.0)
        probs = click_probability(np.arange(8), np.ones(8, dtype=bool), cfg)
        np.testing.assert_allclose(probs, cfg.base_click_prob)
        tally = run_auctions(list(range(8)), [True] * 8, 5_000, cfg, np.random.default_rng(1), {})
        ctr = tally.rank_clicks / tally.rank_impressions
        np.testing.assert_allclose(ctr, cfg.base_click_prob, rtol=0.1)

    def test_irrelevant_clicks_at_floor(self):
        cfg = SimConfig(irrelevant_click_floor=0.1)
        probs = click_probability(np.array([0, 0]), np.array([True, False]), cfg)
        assert probs[1] == pytest.approx(0.1 * probs[0])

    def test_slots_cap_exposure(self):
        cfg = SimConfig(srp_slots=3)
        tally = run_auctions(list(range(10)), [True] * 10, 50, cfg, np.random.default_rng(2), {})
        assert int((tally.impressions > 0).sum()) <= 10
        assert tally.rank_impressions.shape == (3,)
        assert tally.rank_impressions.sum() == 50 * 3 * cfg.impressions_per_auction

    def test_no_entrants(self):
        tally = run_auctions([], [], 10, SimConfig(), np.random.default_rng(0), {})
        assert tally.rank_clicks.sum() == 0


class TestClickLog:
    def test_conservation(self, small_sim):
        for rec in small_sim.log.records:
            assert rec.sales <= rec.clicks <= rec.impressions
        with pytest.raises(ValidationError):
            ClickLogRecord(item_id=1, keyphrase_id=1, impressions=1, clicks=2, sales=0)
        with pytest.raises(ValidationError):
            ClickLogRecord(item_id=1, keyphrase_id=1, impressions=5, clicks=2, sales=3)

    def test_only_search_passing_pairs_logged(self, small_sim):
        oracle = small_sim.world.oracle
        assert small_sim.log.records
        assert all(oracle.label(r.item_id, r.keyphrase_id) == 1 for r in small_sim.log.records)

    @pytest.mark.parametrize("seed", range(20))
    def test_middleman_blind_spot(self, seed):
        sim = run_simulation(_tiny(seed, search_noise=0.05 * (seed % 5), position_decay=0.5 + 0.1 * (seed % 4)))
        assert sim.bias.oracle_fail_fraction == 0.0
        assert sim.bias.irrelevant_coverage == 0.0

    def test_mnar_pairs_exist(self, small_sim):
        assert small_sim.bias.mnar_relevant_unclicked > 0
        assert len(small_sim.bias.rank_ctr) == small_sim.cfg.srp_slots


class TestClickFilter:
    @pytest.mark.parametrize("impressions,clicks,kept", [(1, 1, False), (1000, 1, False), (100, 10, True)])
    def test_thresholds(self, impressions, clicks, kept):
        rec = ClickLogRecord(item_id=0, keyphrase_id=0, impressions=impressions, clicks=clicks, sales=0)
        assert passes_click_filter(rec, SimConfig()) is kept

    def test_dataset_is_subset(self, small_sim):
        kept = derive_click_dataset(small_sim.log.records, small_sim.cfg)
        assert kept == small_sim.clicks
        assert set(r.pair for r in kept) <= set(r.pair for r in small_sim.log.records)


# -------------------------------------------------------------------------------------------------
# Judgments
# -------------------------------------------------------------------------------------------------

class TestJudgments:
    def test_topic_floor(self):
        world = build_world(_tiny(4, judgment_sample_size=15, judgment_topic_floor=6))
        pairs = [(i, k) for i in range(40) for k in range(12)]
        judgments = derive_judgment_dataset(world, pairs)
        per_topic = {}
        for j in judgments:
            t = world.topic_of_item(j.item_id)
            per_topic[t] = per_topic.get(t, 0) + 1
        assert set(per_topic) == {0, 1, 2}
        assert all(n >= 6 for n in per_topic.values())

    def test_labels_come_from_oracle(self, small_sim):
        oracle = small_sim.world.oracle
        assert all(j.label == oracle.label(j.item_id, j.keyphrase_id) for j in small_sim.judgments)
        assert {j.label for j in small_sim.judgments} == {0, 1}

    def test_split_is_disjoint(self, small_sim):
        train = {j.pair for j in small_sim.train_judgments}
        held = {j.pair for j in small_sim.eval_judgments}
        assert train and held
        assert not train & held
        assert train | held == {j.pair for j in small_sim.judgments}

    def test_split_keeps_both_sides(self):
        js = [RelevanceJudgment(item_id=i, keyphrase_id=0, label=i % 2) for i in range(2)]
        train, held = split_judgments(js, 0.9, seed=0)
        assert len(train) == 1 and len(held) == 1


class TestAgreement:
    def test_quadrants_cover_input(self, small_sim):
        world = small_sim.world
        adv_pass = {p: (p[0] + p[1]) % 2 == 0 for p in small_sim.advertised[:200]}
        q = agreement_quadrants(adv_pass, world)
        assert q.both_pass + q.advertising_only + q.search_only + q.both_fail == len(adv_pass)


# -------------------------------------------------------------------------------------------------
# World directories
# -------------------------------------------------------------------------------------------------

class TestWorldDir:
    def test_save_and_load(self, small_sim, tmp_path):
        save_world(small_sim, tmp_path)
        loaded = load_world(tmp_path)
        assert loaded.advertised == small_sim.advertised
        assert load_judgments(tmp_path, "eval") == small_sim.eval_judgments
        assert load_judgments(tmp_path, "train") == small_sim.train_judgments

    def test_saves_are_byte_identical(self, small_sim, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        save_world(small_sim, a)
        save_world(small_sim, b)
        for f in sorted(a.iterdir()):
            assert (b / f.name).read_bytes() == f.read_bytes()

    def test_tampered_items(self, small_sim, tmp_path):
        save_world(small_sim, tmp_path)
        with open(tmp_path / "items.jsonl", "a", encoding="utf-8") as f:
            f.write("\n")
        with pytest.raises(DataError):
            load_world(tmp_path)

    def test_unknown_split(self, tmp_path):
        with pytest.raises(ConfigError):
            load_judgments(tmp_path, "dev")
