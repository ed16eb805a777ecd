"""World directories: line-delimited JSON files plus a manifest that regenerates them."""

from __future__ import annotations

import hashlib
import logging
import os
from pathlib import Path
from typing import Union

from pydantic import ValidationError

from app.bias_sim.config import SimConfig
from app.bias_sim.records import ClickLogRecord, RelevanceJudgment
from app.bias_sim.simulation import Simulation, run_simulation
from app.errors import ConfigError, DataError
from app.runs.store import read_manifest, write_manifest
from app.text_core.catalog import read_jsonl, write_jsonl

logger = logging.getLogger(__name__)

WORLD_FORMAT = 1
CLICK_LOG = "click_log.jsonl"
CLICK_POSITIVES = "click_positives.jsonl"
JUDGMENTS_TRAIN = "judgments_train.jsonl"
JUDGMENTS_EVAL = "judgments_eval.jsonl"


def _file_sha(path: Union[str, Path]) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def save_world(sim: Simulation, directory: Union[str, Path]) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    sim.world.catalog.save(d)
    write_jsonl(d / CLICK_LOG, sim.log.records)
    write_jsonl(d / CLICK_POSITIVES, sim.clicks)
    write_jsonl(d / JUDGMENTS_TRAIN, sim.train_judgments)
    write_jsonl(d / JUDGMENTS_EVAL, sim.eval_judgments)
    write_manifest(str(d), {
        "format": WORLD_FORMAT,
        "seed": sim.cfg.seed,
        "config": sim.cfg.model_dump(),
        "topics": list(sim.world.topic_names),
        "counts": {
            "items": len(sim.world.catalog.items),
            "keyphrases": len(sim.world.catalog.keyphrases),
            "advertised_pairs": len(sim.advertised),
            "click_log": len(sim.log.records),
            "click_positives": len(sim.clicks),
            "judgments_train": len(sim.train_judgments),
            "judgments_eval": len(sim.eval_judgments),
        },
        "items_sha256": _file_sha(d / "items.jsonl"),
        "bias": sim.bias.model_dump(),
    })
    logger.info("wrote world to %s", d)
    return d


def load_world_config(directory: Union[str, Path]) -> SimConfig:
    manifest = read_manifest(str(directory))
    try:
        return SimConfig.model_validate(manifest["config"])
    except (KeyError, ValidationError) as e:
        raise ConfigError(f"{directory}: manifest has no valid config: {e}") from e


def load_world(directory: Union[str, Path]) -> Simulation:
    """Regenerates the simulation from the manifest and checks it against the files on disk."""
    d = Path(directory)
    cfg = load_world_config(d)
    sim = run_simulation(cfg)
    items_path = d / "items.jsonl"
    if os.path.exists(items_path):
        expected = read_manifest(str(d)).get("items_sha256")
        if expected and _file_sha(items_path) != expected:
            raise DataError(f"{items_path} does not match the manifest checksum")
    return sim


def load_click_positives(directory: Union[str, Path]):
    return read_jsonl(Path(directory) / CLICK_POSITIVES, ClickLogRecord)


def load_judgments(directory: Union[str, Path], split: str = "train"):
    name = {"train": JUDGMENTS_TRAIN, "eval": JUDGMENTS_EVAL}.get(split)
    if name is None:
        raise ConfigError(f"unknown judgment split {split!r}")
    return read_jsonl(Path(directory) / name, RelevanceJudgment)
