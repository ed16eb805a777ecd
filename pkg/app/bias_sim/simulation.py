from __future__ import annotations

from dataclasses import dataclass
from typing import List

from app.bias_sim.config import SimConfig
from app.bias_sim.datasets import derive_click_dataset, derive_judgment_dataset, split_judgments
from app.bias_sim.records import ClickLogRecord, Pair, RelevanceJudgment
from app.bias_sim.report import BiasReport, measure_middleman_bias
from app.bias_sim.traffic import TrafficLog, simulate_traffic
from app.bias_sim.world import World, advertised_pairs, build_world


@dataclass
class Simulation:
    """Everything one seeded run of the funnel produces."""

    world: World
    advertised: List[Pair]
    log: TrafficLog
    clicks: List[ClickLogRecord]
    judgments: List[RelevanceJudgment]
    train_judgments: List[RelevanceJudgment]
    eval_judgments: List[RelevanceJudgment]
    bias: BiasReport

    @property
    def cfg(self) -> SimConfig:
        return self.world.cfg


def run_simulation(cfg: SimConfig) -> Simulation:
    world = build_world(cfg)
    advertised = advertised_pairs(world)
    log = simulate_traffic(world, advertised)
    clicks = derive_click_dataset(log.records, cfg)
    judgments = derive_judgment_dataset(world, advertised)
    train, held = split_judgments(judgments, cfg.eval_fraction, cfg.seed)
    bias = measure_middleman_bias(clicks, world, log, advertised)
    return Simulation(world, advertised, log, clicks, judgments, train, held, bias)
