import numpy as np
import pytest

from app.jaccard_filter.jaccard import JaccardConfig, jaccard_filter, jaccard_index
from app.text_core.catalog import ItemDoc, Keyphrase


def _item(title: str) -> ItemDoc:
    return ItemDoc(item_id=1, title=title, category_id=1, category_name="Footwear")


class TestJaccardIndex:
    def test_two_of_five(self):
        assert jaccard_index({"red", "nike", "shoes", "size", "9"}, {"nike", "shoes"}) == pytest.approx(0.4)

    def test_identity(self):
        assert jaccard_index({"a", "b"}, {"a", "b"}) == 1.0

    def test_disjoint(self):
        assert jaccard_index({"a"}, {"b"}) == 0.0

    def test_both_empty(self):
        assert jaccard_index(set(), set()) == 0.0


UNIVERSE = [f"t{i}" for i in range(12)]


def _random_sets(seed: int, n: int):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        ma = rng.random(len(UNIVERSE)) < rng.random()
        mb = rng.random(len(UNIVERSE)) < rng.random()
        yield ma, mb, {t for t, m in zip(UNIVERSE, ma) if m}, {t for t, m in zip(UNIVERSE, mb) if m}


class TestJaccardProperties:
    def test_matches_indicator_count(self):
        for ma, mb, a, b in _random_sets(seed=0, n=500):
            union = int(np.sum(ma | mb))
            expected = int(np.sum(ma & mb)) / union if union else 0.0
            assert jaccard_index(a, b) == pytest.approx(expected, abs=1e-12)

    def test_symmetric_and_bounded(self):
        for _, _, a, b in _random_sets(seed=1, n=300):
            assert jaccard_index(a, b) == jaccard_index(b, a)
            assert 0.0 <= jaccard_index(a, b) <= 1.0

    def test_adding_a_foreign_token_never_raises(self):
        for _, _, a, b in _random_sets(seed=2, n=300):
            for x in set(UNIVERSE) - a:
                assert jaccard_index(a, b | {x}) <= jaccard_index(a, b)

    def test_adding_a_shared_token_never_lowers(self):
        for _, _, a, b in _random_sets(seed=3, n=300):
            for x in b - a:
                assert jaccard_index(a | {x}, b) >= jaccard_index(a, b)

    def test_contained_set_scores_size_ratio(self):
        for _, _, a, b in _random_sets(seed=4, n=300):
            if a:
                assert jaccard_index(a, a | b) == pytest.approx(len(a) / len(a | b))


class TestJaccardFilter:
    def test_pass_at_default_threshold(self):
        (d,) = jaccard_filter(_item("red nike shoes size 9"), [Keyphrase(keyphrase_id=5, text="nike shoes")],
                              JaccardConfig(threshold=0.3))
        assert d.score == pytest.approx(0.4)
        assert d.passed

    def test_short_keyphrase_penalized(self):
        (d,) = jaccard_filter(_item("red nike shoes size 9"), [Keyphrase(keyphrase_id=5, text="nike")],
                              JaccardConfig(threshold=0.3))
        assert d.score == pytest.approx(0.2)
        assert not d.passed

    def test_threshold_zero_passes_everything(self):
        kps = [Keyphrase(keyphrase_id=i, text=t) for i, t in enumerate(["nike", "xyz", "boots laces"])]
        out = jaccard_filter(_item("red nike shoes"), kps, JaccardConfig(threshold=0.0))
        assert all(d.passed for d in out)
        assert [d.keyphrase_id for d in out] == [0, 1, 2]

    def test_category_tokens_optional(self):
        kp = [Keyphrase(keyphrase_id=1, text="footwear")]
        assert jaccard_filter(_item("red shoes"), kp, JaccardConfig())[0].score == 0.0
        assert jaccard_filter(_item("red shoes"), kp, JaccardConfig(use_category_tokens=True))[0].score > 0.0
