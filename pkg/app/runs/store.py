from __future__ import annotations

import json
import os
import time
import uuid
from dataclasses import dataclass
from typing import Any, Dict

from app.errors import DataError

MANIFEST_NAME = "manifest.json"


def write_manifest(directory: str, payload: Dict[str, Any], stamp: bool = False) -> str:
    """Sorted-key JSON so identical payloads give identical bytes; ``stamp`` adds a saved_at time."""
    os.makedirs(directory, exist_ok=True)
    payload2 = dict(payload)
    if stamp:
        payload2["_meta"] = {"saved_at": int(time.time())}
    path = os.path.join(directory, MANIFEST_NAME)
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as f:
        json.dump(payload2, f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")
    os.replace(tmp, path)
    return path


def read_manifest(directory: str) -> Dict[str, Any]:
    path = os.path.join(directory, MANIFEST_NAME)
    if not os.path.exists(path):
        raise DataError(f"no {MANIFEST_NAME} in {directory}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: invalid manifest: {e}") from e


@dataclass
class RunPaths:
    run_id: str
    base_dir: str

    @property
    def run_dir(self) -> str:
        return os.path.join(self.base_dir, self.run_id)

    @property
    def report_json_path(self) -> str:
        return os.path.join(self.run_dir, "report.json")


class RunStore:
    """File-based store for experiment runs: one directory per run with a stamped manifest."""

    def __init__(self, base_dir: str = "runs") -> None:
        self.base_dir = base_dir
        os.makedirs(self.base_dir, exist_ok=True)

    def new_run_id(self, kind: str = "run") -> str:
        return f"{kind}-{uuid.uuid4().hex[:12]}"

    def paths(self, run_id: str) -> RunPaths:
        return RunPaths(run_id=run_id, base_dir=self.base_dir)

    def save_manifest(self, run_id: str, payload: Dict[str, Any]) -> str:
        return write_manifest(self.paths(run_id).run_dir, payload, stamp=True)
