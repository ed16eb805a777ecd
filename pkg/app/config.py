"""
Run configuration: one pydantic model per section, loaded from YAML or JSON
and overridable with ``--section.key value`` flags.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from app.bias_sim.config import SimConfig
from app.encoders.bi_encoder import TrainConfig
from app.encoders.cross_encoder import CrossTrainConfig
from app.errors import ConfigError
from app.jaccard_filter.jaccard import JaccardConfig
from app.serving.nrt import DEFAULT_WINDOW_MS
from app.text_core.sequences import DEFAULT_MAX_LEN


class TextConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    max_len: int = Field(default=DEFAULT_MAX_LEN, ge=4)
    min_freq: int = Field(default=1, ge=1)


class ServingConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    window_ms: int = Field(default=DEFAULT_WINDOW_MS, ge=1)
    host: str = Field(default_factory=lambda: os.getenv("KPALIGN_HOST", "127.0.0.1"))
    port: int = Field(default_factory=lambda: int(os.getenv("KPALIGN_PORT", "8000")))
    chunk_size: int = Field(default=256, ge=1)


class EvalConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    min_f1: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    diff_budget_seconds: float = Field(default=60.0, gt=0.0)


class ExperimentConfig(BaseModel):
    """Desk-scale caps for the experiment suites."""

    model_config = ConfigDict(extra="forbid")

    max_train_pairs: int = Field(default=6000, ge=1)
    negatives_per_positive: int = Field(default=1, ge=1)
    timing_pairs: int = Field(default=4000, ge=1)
    diff_fraction: float = Field(default=0.05, gt=0.0, le=1.0)


class ModelSelection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    family: Literal["bi", "cross", "jaccard"] = "cross"
    objective: Literal["contrastive", "softmax", "irns"] = "contrastive"
    preset: str = "tiny"
    labels: Literal["judgments", "clicks"] = "judgments"


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seed: int
    sim: SimConfig = Field(default_factory=SimConfig)
    text: TextConfig = Field(default_factory=TextConfig)
    bi: TrainConfig = Field(default_factory=TrainConfig)
    cross: CrossTrainConfig = Field(default_factory=CrossTrainConfig)
    jaccard: JaccardConfig = Field(default_factory=JaccardConfig)
    serving: ServingConfig = Field(default_factory=ServingConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)
    model: ModelSelection = Field(default_factory=ModelSelection)
    experiment: ExperimentConfig = Field(default_factory=ExperimentConfig)

    def seeded(self) -> "RunConfig":
        """Pushes the run seed into every section that does not pin its own."""
        data = self.model_dump()
        for section in ("sim", "bi", "cross"):
            if "seed" not in getattr(self, section).model_fields_set:
                data[section]["seed"] = self.seed
        return RunConfig.model_validate(data)


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {p}: {e}") from e
    try:
        data = json.loads(text) if p.suffix.lower() == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"{p}: not valid {'JSON' if p.suffix.lower() == '.json' else 'YAML'}: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{p}: top level must be a mapping")
    return data


def parse_overrides(argv: Sequence[str]) -> List[Tuple[str, Any]]:
    """``--sim.search-noise 0.1`` -> [("sim.search_noise", 0.1)]; values parse as YAML scalars."""
    out: List[Tuple[str, Any]] = []
    i = 0
    while i < len(argv):
        flag = argv[i]
        if not flag.startswith("--") or "." not in flag:
            raise ConfigError(f"unrecognized argument {flag!r}; overrides look like --section.key value")
        key = flag[2:]
        if "=" in key:
            key, raw = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(argv):
                raise ConfigError(f"{flag} needs a value")
            raw = argv[i + 1]
            i += 2
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError:
            value = raw
        out.append((key.replace("-", "_"), value))
    return out


def apply_overrides(data: Dict[str, Any], overrides: Sequence[Tuple[str, Any]]) -> Dict[str, Any]:
    data = json.loads(json.dumps(data))
    for dotted, value in overrides:
        parts = dotted.split(".")
        node = data
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"cannot override {dotted}: {part} is not a section")
            node = child
        node[parts[-1]] = value
    return data


def load_run_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Sequence[Tuple[str, Any]] = (),
    seed: Optional[int] = None,
) -> RunConfig:
    data = read_config_file(path) if path else {}
    data = apply_overrides(data, overrides)
    if seed is not None:
        data["seed"] = seed
    if "seed" not in data:
        raise ConfigError("seed is mandatory (set it in the config file or pass --seed)")
    try:
        return RunConfig.model_validate(data).seeded()
    except ValidationError as e:
        raise ConfigError(f"invalid config: {e}") from e
