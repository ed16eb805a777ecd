from app.bias_sim.config import SimConfig
from app.bias_sim.datasets import derive_click_dataset, derive_judgment_dataset, split_judgments
from app.bias_sim.world_dir import load_world, save_world
from app.bias_sim.records import ClickLogRecord, Pair, RelevanceJudgment
from app.bias_sim.report import AgreementQuadrants, BiasReport, agreement_quadrants, measure_middleman_bias
from app.bias_sim.simulation import Simulation, run_simulation
from app.bias_sim.traffic import TrafficLog, run_auctions, simulate_traffic
from app.bias_sim.world import GroundTruth, SearchOracle, World, advertised_pairs, build_world, gen_catalog, search_oracle

__all__ = [
    "SimConfig", "derive_click_dataset", "derive_judgment_dataset", "split_judgments",
    "load_world", "save_world", "ClickLogRecord", "Pair", "RelevanceJudgment",
    "AgreementQuadrants", "BiasReport", "agreement_quadrants", "measure_middleman_bias",
    "Simulation", "run_simulation", "TrafficLog", "run_auctions", "simulate_traffic",
    "GroundTruth", "SearchOracle", "World", "advertised_pairs", "build_world", "gen_catalog", "search_oracle",
]
