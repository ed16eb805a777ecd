import numpy as np
import pytest

from app.bias_sim.config import SimConfig
from app.bias_sim.simulation import run_simulation
from app.jaccard_filter.jaccard import JaccardConfig
from app.scoring.jaccard import JaccardScorer
from app.text_core.catalog import Catalog, ItemDoc, Keyphrase
from app.text_core.vocab import build_vocab


# -------------------------------------------------------------------------------------------------
# Catalog fixtures
# -------------------------------------------------------------------------------------------------

@pytest.fixture
def toy_catalog():
    """3 items x 2 keyphrases, all in one category."""
    items = [
        ItemDoc(item_id=1, title="Red Nike Shoes Size 9", category_id=7, category_name="Footwear"),
        ItemDoc(item_id=2, title="Blue Running Shoes", category_id=7, category_name="Footwear"),
        ItemDoc(item_id=3, title="Leather Hiking Boots", category_id=7, category_name="Footwear"),
    ]
    kps = [
        Keyphrase(keyphrase_id=10, text="nike shoes", category_id=7),
        Keyphrase(keyphrase_id=11, text="boots", category_id=7),
    ]
    return Catalog(items, kps)


@pytest.fixture
def toy_vocab(toy_catalog):
    return build_vocab(toy_catalog.texts())


@pytest.fixture
def jaccard_scorer():
    return JaccardScorer(JaccardConfig(threshold=0.3))


# -------------------------------------------------------------------------------------------------
# Simulated worlds
# -------------------------------------------------------------------------------------------------

@pytest.fixture(scope="session")
def small_cfg():
    return SimConfig(n_items=120, n_keyphrases=36, n_topics=4, seed=3)


@pytest.fixture(scope="session")
def small_sim(small_cfg):
    return run_simulation(small_cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
