"""Auction and click simulation with position-biased examination."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np

from app.bias_sim.config import SimConfig
from app.bias_sim.records import ClickLogRecord, Pair
from app.bias_sim.world import World

logger = logging.getLogger(__name__)


@dataclass
class TrafficLog:
    records: List[ClickLogRecord]
    rank_impressions: np.ndarray
    rank_clicks: np.ndarray
    auctions: int = 0

    def rank_ctr(self) -> List[float]:
        imp = self.rank_impressions
        return [float(c / i) if i else 0.0 for c, i in zip(self.rank_clicks, imp)]

    def by_pair(self) -> Dict[Pair, ClickLogRecord]:
        return {r.pair: r for r in self.records}


@dataclass
class AuctionTally:
    """Per-entrant and per-rank counters accumulated over repeated auctions for one keyphrase."""

    impressions: np.ndarray
    clicks: np.ndarray
    sales: np.ndarray
    rank_impressions: np.ndarray
    rank_clicks: np.ndarray

    @classmethod
    def empty(cls, n_entrants: int, slots: int) -> "AuctionTally":
        per_entrant = [np.zeros(n_entrants, dtype=np.int64) for _ in range(3)]
        return cls(*per_entrant, np.zeros(slots, dtype=np.int64), np.zeros(slots, dtype=np.int64))


def click_probability(ranks: np.ndarray, relevant: np.ndarray, cfg: SimConfig) -> np.ndarray:
    """base · γ^r for relevant entrants; irrelevant ones click at the floor fraction of that."""
    rel_factor = np.where(relevant, 1.0, cfg.irrelevant_click_floor)
    return np.clip(cfg.base_click_prob * cfg.position_decay ** ranks * rel_factor, 0.0, 1.0)


def run_auctions(
    entrant_ids: Sequence[int],
    relevant: Sequence[bool],
    n_auctions: int,
    cfg: SimConfig,
    rng: np.random.Generator,
    popularity: Dict[int, int],
) -> AuctionTally:
    """
    Repeated auctions for one keyphrase. Entrants are ranked by running clicks
    (``popularity``, shared across keyphrases and updated in place), ties by id;
    only the first ``srp_slots`` ranks are shown.
    """
    ids = np.asarray(entrant_ids, dtype=np.int64)
    rel = np.asarray(relevant, dtype=bool)
    tally = AuctionTally.empty(len(ids), cfg.srp_slots)
    if len(ids) == 0:
        return tally
    imp = cfg.impressions_per_auction
    for _ in range(n_auctions):
        pop = np.fromiter((popularity.get(int(i), 0) for i in ids), dtype=np.int64, count=len(ids))
        order = np.lexsort((ids, -pop))[: cfg.srp_slots]
        ranks = np.arange(len(order))
        clicks = rng.binomial(imp, click_probability(ranks, rel[order], cfg))
        sales = rng.binomial(clicks, cfg.sales_rate)
        tally.impressions[order] += imp
        tally.clicks[order] += clicks
        tally.sales[order] += sales
        tally.rank_impressions[ranks] += imp
        tally.rank_clicks[ranks] += clicks
        for i, c in zip(ids[order], clicks):
            if c:
                popularity[int(i)] = popularity.get(int(i), 0) + int(c)
    return tally


def auctions_for(world: World, keyphrase_id: int) -> int:
    cfg = world.cfg
    total = cfg.auctions_per_keyphrase * len(world.catalog.keyphrases)
    return max(1, int(round(total * world.traffic[keyphrase_id])))


def simulate_traffic(world: World, advertised: Sequence[Pair]) -> TrafficLog:
    """Only Search-passing pairs ever enter an auction, so only they can appear in the log."""
    cfg = world.cfg
    rng = np.random.default_rng([cfg.seed, 1])
    by_kp: Dict[int, List[int]] = {}
    for item_id, kp_id in advertised:
        world.catalog.item(item_id)
        world.catalog.keyphrase(kp_id)
        by_kp.setdefault(kp_id, []).append(item_id)

    popularity: Dict[int, int] = {}
    records: List[ClickLogRecord] = []
    rank_imp = np.zeros(cfg.srp_slots, dtype=np.int64)
    rank_clk = np.zeros(cfg.srp_slots, dtype=np.int64)
    n_auctions = 0
    for kp_id in sorted(by_kp):
        entrants = [i for i in sorted(set(by_kp[kp_id])) if world.oracle.label(i, kp_id) == 1]
        if not entrants:
            continue
        rel = [world.truth.relevant(i, kp_id) for i in entrants]
        n = auctions_for(world, kp_id)
        tally = run_auctions(entrants, rel, n, cfg, rng, popularity)
        n_auctions += n
        rank_imp += tally.rank_impressions
        rank_clk += tally.rank_clicks
        for j, item_id in enumerate(entrants):
            if tally.impressions[j] == 0:
                continue
            records.append(ClickLogRecord(
                item_id=item_id,
                keyphrase_id=kp_id,
                impressions=int(tally.impressions[j]),
                clicks=int(tally.clicks[j]),
                sales=int(tally.sales[j]),
            ))
    records.sort(key=lambda r: r.pair)
    logger.info("simulated %d auctions over %d keyphrases -> %d click-log records",
                n_auctions, len(by_kp), len(records))
    return TrafficLog(records=records, rank_impressions=rank_imp, rank_clicks=rank_clk, auctions=n_auctions)
