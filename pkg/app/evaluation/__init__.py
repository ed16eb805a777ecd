from app.evaluation.metrics import (
    Comparison,
    ConfusionCounts,
    GateResult,
    ModelRow,
    PRF1Report,
    compare,
    confusion,
    fn_length_breakdown,
    format_table,
    gate,
    gate_failed,
    head_tail_breakdown,
    predictions_from_scores,
    prf1,
    select_model,
    threshold_sweep,
)
from app.evaluation.report import EvalReport, write_report_json

__all__ = [
    "Comparison", "ConfusionCounts", "GateResult", "ModelRow", "PRF1Report",
    "compare", "confusion", "fn_length_breakdown", "format_table", "gate", "gate_failed",
    "head_tail_breakdown", "predictions_from_scores", "prf1", "select_model", "threshold_sweep",
    "EvalReport", "write_report_json",
]
