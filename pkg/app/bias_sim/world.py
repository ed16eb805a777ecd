"""
Synthetic marketplace with known ground truth.

Each topic owns a pool of "concepts". A concept has a primary surface token
and, for some concepts, a synonym token that only ever appears in keyphrases.
Items mix a dominant topic with a few tokens from a secondary topic, and
keyphrases draw from a single topic.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Set, Tuple

import numpy as np

from app.bias_sim.config import SimConfig
from app.bias_sim.records import Pair
from app.errors import ConfigError, DataError
from app.text_core.catalog import Catalog, ItemDoc, Keyphrase

logger = logging.getLogger(__name__)

TOPIC_NAMES: Tuple[str, ...] = (
    "Footwear", "Watches", "Cameras", "Kitchen", "Guitars", "Cycling",
    "Gardening", "Jewelry", "Toys", "Luggage", "Fishing", "Lighting",
    "Bedding", "Pet Supplies", "Video Games", "Golf", "Camping", "Perfume",
    "Tools", "Stationery", "Audio", "Coffee", "Knitting", "Skateboards",
)
_SYLLABLES = ("ka", "lo", "mi", "ne", "ru", "sa", "to", "vi", "ze", "po", "da", "fe", "gu", "ho", "ji", "be")


# -----------------------------
# Vocabulary of the world
# -----------------------------
@dataclass(frozen=True)
class TopicPool:
    primary: Tuple[str, ...]
    synonyms: Dict[int, str]  # concept index -> synonym surface form


def _word(rng: np.random.Generator) -> str:
    n = int(rng.integers(2, 4))
    return "".join(_SYLLABLES[int(i)] for i in rng.integers(0, len(_SYLLABLES), size=n))


def _draw_unique_words(rng: np.random.Generator, n: int, taken: Set[str]) -> List[str]:
    out: List[str] = []
    while len(out) < n:
        w = _word(rng)
        if w not in taken:
            taken.add(w)
            out.append(w)
    return out


def _build_pools(cfg: SimConfig, rng: np.random.Generator) -> Tuple[List[TopicPool], Tuple[str, ...]]:
    if cfg.n_topics > len(TOPIC_NAMES):
        raise ConfigError(f"n_topics={cfg.n_topics} exceeds the topic pool capacity of {len(TOPIC_NAMES)}")
    taken: Set[str] = {t for name in TOPIC_NAMES for t in name.lower().split()}
    pools: List[TopicPool] = []
    n_syn = cfg.tokens_per_topic // 2
    for _ in range(cfg.n_topics):
        primary = _draw_unique_words(rng, cfg.tokens_per_topic, taken)
        syn_words = _draw_unique_words(rng, n_syn, taken)
        pools.append(TopicPool(tuple(primary), {i: w for i, w in enumerate(syn_words)}))
    noise = tuple(_draw_unique_words(rng, max(4, cfg.tokens_per_topic // 2), taken))
    return pools, noise


# -----------------------------
# Ground truth
# -----------------------------
@dataclass
class GroundTruth:
    """Topic mixtures plus discriminative concepts for every item and keyphrase."""

    item_mixture: Dict[int, np.ndarray]
    kp_mixture: Dict[int, np.ndarray]
    item_concepts: Dict[int, FrozenSet[Tuple[int, int]]]
    kp_concepts: Dict[int, FrozenSet[Tuple[int, int]]]

    def dominant_topic(self, item_id: int) -> int:
        return int(np.argmax(self._item(item_id)))

    def kp_topic(self, keyphrase_id: int) -> int:
        return int(np.argmax(self._kp(keyphrase_id)))

    def _item(self, item_id: int) -> np.ndarray:
        try:
            return self.item_mixture[item_id]
        except KeyError:
            raise DataError(f"unknown item_id {item_id}") from None

    def _kp(self, keyphrase_id: int) -> np.ndarray:
        try:
            return self.kp_mixture[keyphrase_id]
        except KeyError:
            raise DataError(f"unknown keyphrase_id {keyphrase_id}") from None

    def relevant(self, item_id: int, keyphrase_id: int) -> bool:
        """Argmax-topic match, or at least one shared discriminative concept (synonyms count as the same concept)."""
        if int(np.argmax(self._item(item_id))) == int(np.argmax(self._kp(keyphrase_id))):
            return True
        return bool(self.item_concepts[item_id] & self.kp_concepts[keyphrase_id])


# -----------------------------
# Catalog generation
# -----------------------------
def _title_case(tokens: List[str]) -> str:
    return " ".join(t.capitalize() for t in tokens)


def gen_catalog(cfg: SimConfig) -> Tuple[List[ItemDoc], List[Keyphrase], GroundTruth]:
    rng = np.random.default_rng([cfg.seed, 0])
    pools, noise = _build_pools(cfg, rng)
    T = cfg.n_topics
    names = TOPIC_NAMES[:T]

    items: List[ItemDoc] = []
    item_mix: Dict[int, np.ndarray] = {}
    item_concepts: Dict[int, FrozenSet[Tuple[int, int]]] = {}
    dominant = rng.permutation(np.arange(cfg.n_items) % T)
    for item_id in range(cfg.n_items):
        t1 = int(dominant[item_id])
        t2 = int((t1 + rng.integers(1, T)) % T)
        length = int(rng.integers(cfg.title_len_min, cfg.title_len_max + 1))
        n_dom = length - cfg.secondary_tokens
        dom_idx = rng.choice(cfg.tokens_per_topic, size=min(n_dom, cfg.tokens_per_topic), replace=False)
        sec_idx = rng.choice(cfg.tokens_per_topic, size=cfg.secondary_tokens, replace=False)
        tokens = [pools[t1].primary[int(i)] for i in dom_idx] + [pools[t2].primary[int(i)] for i in sec_idx]
        if rng.random() < cfg.noise_token_rate:
            tokens.append(noise[int(rng.integers(len(noise)))])
        tokens = [tokens[int(i)] for i in rng.permutation(len(tokens))]

        mix = np.zeros(T)
        mix[t1] = len(dom_idx) / (len(dom_idx) + len(sec_idx))
        mix[t2] = 1.0 - mix[t1]
        item_mix[item_id] = mix
        item_concepts[item_id] = frozenset(
            [(t1, int(i)) for i in dom_idx] + [(t2, int(i)) for i in sec_idx]
        )
        items.append(ItemDoc(item_id=item_id, title=_title_case(tokens), category_id=t1, category_name=names[t1]))

    keyphrases: List[Keyphrase] = []
    kp_mix: Dict[int, np.ndarray] = {}
    kp_concepts: Dict[int, FrozenSet[Tuple[int, int]]] = {}
    seen_texts: Set[str] = set()
    kp_topics = rng.permutation(np.arange(cfg.n_keyphrases) % T)
    for kp_id in range(cfg.n_keyphrases):
        t = int(kp_topics[kp_id])
        pool = pools[t]
        for _attempt in range(20):
            n_tok = 1 if rng.random() < cfg.single_token_rate else int(rng.integers(2, 4))
            idx = rng.choice(cfg.tokens_per_topic, size=n_tok, replace=False)
            words = [
                pool.synonyms[int(i)] if int(i) in pool.synonyms and rng.random() < cfg.synonym_rate
                else pool.primary[int(i)]
                for i in idx
            ]
            text = " ".join(words)
            if text not in seen_texts:
                break
        seen_texts.add(text)
        mix = np.zeros(T)
        mix[t] = 1.0
        kp_mix[kp_id] = mix
        kp_concepts[kp_id] = frozenset((t, int(i)) for i in idx)
        keyphrases.append(Keyphrase(keyphrase_id=kp_id, text=text, category_id=t))

    truth = GroundTruth(item_mix, kp_mix, item_concepts, kp_concepts)
    _check_both_classes(items, keyphrases, truth)
    return items, keyphrases, truth


def _check_both_classes(items: List[ItemDoc], keyphrases: List[Keyphrase], truth: GroundTruth) -> None:
    seen = set()
    for it in items:
        for kp in keyphrases:
            seen.add(truth.relevant(it.item_id, kp.keyphrase_id))
            if len(seen) == 2:
                return
    raise ConfigError("degenerate world: need both relevant and irrelevant pairs; increase n_items or n_topics")


# -----------------------------
# Search oracle
# -----------------------------
def _pair_uniform(seed: int, item_id: int, keyphrase_id: int) -> float:
    h = hashlib.blake2b(f"{seed}:{item_id}:{keyphrase_id}".encode(), digest_size=8, person=b"search-oracle")
    return int.from_bytes(h.digest(), "big") / 2.0 ** 64


class SearchOracle:
    """Ground truth flipped with probability search_noise; one fixed answer per pair."""

    def __init__(self, truth: GroundTruth, search_noise: float, seed: int) -> None:
        self.truth = truth
        self.search_noise = search_noise
        self.seed = seed
        self._memo: Dict[Pair, int] = {}

    def label(self, item_id: int, keyphrase_id: int) -> int:
        key = (item_id, keyphrase_id)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        rel = self.truth.relevant(item_id, keyphrase_id)
        flip = _pair_uniform(self.seed, item_id, keyphrase_id) < self.search_noise
        out = int(rel != flip)
        self._memo[key] = out
        return out


# -----------------------------
# World
# -----------------------------
@dataclass
class World:
    cfg: SimConfig
    catalog: Catalog
    truth: GroundTruth
    topic_names: Tuple[str, ...]
    traffic: Dict[int, float]  # keyphrase_id -> share of auctions, sums to 1
    heads: FrozenSet[int]
    oracle: SearchOracle = field(repr=False)

    def is_head(self, keyphrase_id: int) -> bool:
        return keyphrase_id in self.heads

    def topic_of_item(self, item_id: int) -> int:
        return self.catalog.item(item_id).category_id

    def topic_traffic(self) -> np.ndarray:
        share = np.zeros(len(self.topic_names))
        for kp_id, w in self.traffic.items():
            share[self.truth.kp_topic(kp_id)] += w
        return share


def _traffic_weights(keyphrases: List[Keyphrase], cfg: SimConfig) -> Tuple[Dict[int, float], FrozenSet[int]]:
    """Zipf shares over a ranking that favours shorter keyphrases at the head."""
    rng = np.random.default_rng([cfg.seed, 2])
    lengths = np.array([len(kp.text.split()) for kp in keyphrases], dtype=np.float64)
    order = np.argsort(lengths + 1.5 * rng.random(len(keyphrases)), kind="stable")
    w = 1.0 / np.arange(1, len(keyphrases) + 1) ** cfg.zipf_exponent
    w /= w.sum()
    traffic = {keyphrases[int(i)].keyphrase_id: float(w[r]) for r, i in enumerate(order)}
    n_head = max(1, int(np.ceil(cfg.head_fraction * len(keyphrases))))
    heads = frozenset(keyphrases[int(i)].keyphrase_id for i in order[:n_head])
    return traffic, heads


def build_world(cfg: SimConfig) -> World:
    items, keyphrases, truth = gen_catalog(cfg)
    traffic, heads = _traffic_weights(keyphrases, cfg)
    world = World(
        cfg=cfg,
        catalog=Catalog(items, keyphrases),
        truth=truth,
        topic_names=TOPIC_NAMES[:cfg.n_topics],
        traffic=traffic,
        heads=heads,
        oracle=SearchOracle(truth, cfg.search_noise, cfg.seed),
    )
    logger.info("world seed=%d: %d items, %d keyphrases, %d topics, %d head keyphrases",
                cfg.seed, len(items), len(keyphrases), cfg.n_topics, len(heads))
    return world


def search_oracle(world: World, item_id: int, keyphrase_id: int) -> int:
    world.catalog.item(item_id)
    world.catalog.keyphrase(keyphrase_id)
    return world.oracle.label(item_id, keyphrase_id)


# -----------------------------
# Advertising candidates
# -----------------------------
def advertised_pairs(world: World) -> List[Pair]:
    """Dominant-topic keyphrases, secondary-topic near misses and a few random ones per item."""
    cfg = world.cfg
    rng = np.random.default_rng([cfg.seed, 3])
    by_topic: Dict[int, List[int]] = {}
    for kp_id in sorted(world.catalog.keyphrases):
        by_topic.setdefault(world.truth.kp_topic(kp_id), []).append(kp_id)
    all_kps = np.array(sorted(world.catalog.keyphrases))

    def pick(pool, k):
        k = min(k, len(pool))
        return [int(x) for x in rng.choice(pool, size=k, replace=False)] if k else []

    pairs: Set[Pair] = set()
    for item_id in sorted(world.catalog.items):
        mix = world.truth.item_mixture[item_id]
        t1 = int(np.argmax(mix))
        ranked = np.argsort(-mix, kind="stable")
        t2 = int(ranked[1])
        chosen = pick(by_topic.get(t1, []), cfg.candidates_dominant)
        if mix[t2] > 0:
            chosen += pick(by_topic.get(t2, []), cfg.candidates_secondary)
        chosen += pick(all_kps, cfg.candidates_random)
        pairs.update((item_id, kp) for kp in chosen)
    return sorted(pairs)
