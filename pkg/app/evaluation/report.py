from __future__ import annotations

import json
import os
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from app.evaluation.metrics import ConfusionCounts, GateResult, ModelRow


class EvalReport(BaseModel):
    """Everything an evaluation run writes: table rows plus per-model follow-up analysis."""

    title: str = "Offline alignment with Search relevance"
    rows: List[ModelRow] = Field(default_factory=list)
    confusion: Dict[str, ConfusionCounts] = Field(default_factory=dict)
    fn_by_length: Dict[str, Dict[int, int]] = Field(default_factory=dict)
    fn_head_tail: Dict[str, Dict[str, int]] = Field(default_factory=dict)
    gate: Dict[str, GateResult] = Field(default_factory=dict)
    selected: Optional[str] = None
    notes: Dict[str, Any] = Field(default_factory=dict)

    def row(self, model: str) -> ModelRow:
        for r in self.rows:
            if r.model == model:
                return r
        raise KeyError(model)


def write_report_json(report: EvalReport, out_path: str) -> None:
    os.makedirs(os.path.dirname(out_path) or ".", exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as f:
        json.dump(report.model_dump(mode="json"), f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")
