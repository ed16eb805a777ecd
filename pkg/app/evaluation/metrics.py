"""
Alignment metrics against Search judgments. The positive class is Search-pass
(label 1): precision is how aligned the Advertising filter is with Search,
recall is the opportunity it loses.
"""

from __future__ import annotations

from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from app.bias_sim.records import Pair, RelevanceJudgment
from app.errors import DataError
from app.text_core.catalog import Keyphrase
from app.text_core.tokenizer import tokenize

Prediction = Tuple[Pair, bool]


class ConfusionCounts(BaseModel):
    tp: int = Field(default=0, ge=0)
    fp: int = Field(default=0, ge=0)
    fn: int = Field(default=0, ge=0)
    tn: int = Field(default=0, ge=0)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def passed(self) -> int:
        return self.tp + self.fp


class PRF1Report(BaseModel):
    precision: float = Field(ge=0.0, le=1.0)
    recall: float = Field(ge=0.0, le=1.0)
    f1: float = Field(ge=0.0, le=1.0)
    support_pos: int = 0
    support_neg: int = 0


def _labels(judgments: Iterable[RelevanceJudgment]) -> Dict[Pair, int]:
    return {j.pair: j.label for j in judgments}


def _aligned(preds: Sequence[Prediction], judgments: Iterable[RelevanceJudgment]) -> List[Tuple[Pair, bool, int]]:
    labels = _labels(judgments)
    missing = [p for p, _ in preds if p not in labels]
    if missing:
        shown = ", ".join(str(p) for p in missing[:10])
        more = f" (+{len(missing) - 10} more)" if len(missing) > 10 else ""
        raise DataError(f"no judgment for {len(missing)} predicted pair(s): {shown}{more}")
    return [(p, bool(passed), labels[p]) for p, passed in preds]


def confusion(preds: Sequence[Prediction], judgments: Iterable[RelevanceJudgment]) -> ConfusionCounts:
    c = ConfusionCounts()
    for _, passed, label in _aligned(preds, judgments):
        if passed and label:
            c.tp += 1
        elif passed:
            c.fp += 1
        elif label:
            c.fn += 1
        else:
            c.tn += 1
    return c


def prf1(c: ConfusionCounts) -> PRF1Report:
    p = c.tp / (c.tp + c.fp) if (c.tp + c.fp) else 0.0
    r = c.tp / (c.tp + c.fn) if (c.tp + c.fn) else 0.0
    f1 = 2 * p * r / (p + r) if (p + r) > 0 else 0.0
    return PRF1Report(precision=p, recall=r, f1=f1, support_pos=c.tp + c.fn, support_neg=c.fp + c.tn)


def predictions_from_scores(pairs: Sequence[Pair], scores: Sequence[float], threshold: float) -> List[Prediction]:
    return [(p, float(s) >= threshold) for p, s in zip(pairs, scores)]


# -----------------------------
# Follow-up breakdowns
# -----------------------------
def _false_negatives(preds: Sequence[Prediction], judgments: Iterable[RelevanceJudgment]) -> List[Pair]:
    return [p for p, passed, label in _aligned(preds, judgments) if label and not passed]


def fn_length_breakdown(
    preds: Sequence[Prediction],
    judgments: Iterable[RelevanceJudgment],
    keyphrases: Mapping[int, Keyphrase],
) -> Dict[int, int]:
    """False negatives bucketed by keyphrase token count."""
    out: Dict[int, int] = {}
    for _, kp_id in _false_negatives(preds, judgments):
        kp = keyphrases.get(kp_id)
        if kp is None:
            raise DataError(f"unknown keyphrase_id {kp_id}")
        n = len(tokenize(kp.text))
        out[n] = out.get(n, 0) + 1
    return dict(sorted(out.items()))


def head_tail_breakdown(
    preds: Sequence[Prediction],
    judgments: Iterable[RelevanceJudgment],
    is_head: Callable[[int], bool],
) -> Dict[str, int]:
    out = {"head": 0, "tail": 0}
    for _, kp_id in _false_negatives(preds, judgments):
        out["head" if is_head(kp_id) else "tail"] += 1
    return out


class Comparison(BaseModel):
    d_tp: int
    d_fp: int
    d_fn: int
    d_tn: int
    surfaced_before: int
    surfaced_after: int

    @property
    def surfaced_change(self) -> float:
        if self.surfaced_before == 0:
            return 0.0
        return (self.surfaced_after - self.surfaced_before) / self.surfaced_before


def compare(before: ConfusionCounts, after: ConfusionCounts) -> Comparison:
    """Deltas between two filters on the same judgments (after minus before)."""
    return Comparison(
        d_tp=after.tp - before.tp,
        d_fp=after.fp - before.fp,
        d_fn=after.fn - before.fn,
        d_tn=after.tn - before.tn,
        surfaced_before=before.passed,
        surfaced_after=after.passed,
    )


class SweepPoint(BaseModel):
    threshold: float
    tp: int
    fp: int
    fn: int
    tn: int
    f1: float


def threshold_sweep(scores: Sequence[float], labels: Sequence[int], thresholds: Sequence[float]) -> List[SweepPoint]:
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64).astype(bool)
    out: List[SweepPoint] = []
    for t in sorted(thresholds):
        passed = s >= t
        c = ConfusionCounts(
            tp=int(np.sum(passed & y)),
            fp=int(np.sum(passed & ~y)),
            fn=int(np.sum(~passed & y)),
            tn=int(np.sum(~passed & ~y)),
        )
        out.append(SweepPoint(threshold=float(t), tp=c.tp, fp=c.fp, fn=c.fn, tn=c.tn, f1=prf1(c).f1))
    return out


# -----------------------------
# Model table, gate and selection
# -----------------------------
class ModelRow(BaseModel):
    """One row of the model comparison table; Diff/Full are measured batch seconds."""

    model: str
    precision: float
    recall: float
    f1: float
    diff_seconds: Optional[float] = None
    full_seconds: Optional[float] = None

    @classmethod
    def from_report(cls, model: str, rep: PRF1Report, **timings: Optional[float]) -> "ModelRow":
        return cls(model=model, precision=rep.precision, recall=rep.recall, f1=rep.f1, **timings)


class GateResult(BaseModel):
    status: str
    f1: float
    min_f1: float


def gate(rows: Sequence[ModelRow], min_f1: float, gated: Optional[Sequence[str]] = None) -> Dict[str, GateResult]:
    """A model FAILS if its F1 is below min_f1; only models named in ``gated`` are checked when given."""
    checklist: Dict[str, GateResult] = {}
    for row in rows:
        if gated is not None and row.model not in gated:
            continue
        checklist[row.model] = GateResult(
            status="FAIL" if row.f1 < min_f1 else "PASS",
            f1=row.f1,
            min_f1=min_f1,
        )
    return checklist


def gate_failed(checklist: Mapping[str, GateResult]) -> List[str]:
    return [name for name, res in checklist.items() if res.status == "FAIL"]


def select_model(rows: Sequence[ModelRow], diff_budget_seconds: float) -> Optional[ModelRow]:
    """Best F1 among models whose Diff latency fits the budget; ties go to the faster Diff."""
    fits = [r for r in rows if r.diff_seconds is not None and r.diff_seconds <= diff_budget_seconds]
    if not fits:
        return None
    return max(fits, key=lambda r: (r.f1, -(r.diff_seconds or 0.0)))


def _fmt_seconds(v: Optional[float]) -> str:
    return "-" if v is None else f"{v:.3f}s"


def format_table(rows: Sequence[ModelRow]) -> str:
    """Fixed-width table in Model, Precision, Recall, F1, Diff, Full order."""
    headers = ("Model", "Precision", "Recall", "F1", "Diff", "Full")
    body = [
        (r.model, f"{r.precision:.2f}", f"{r.recall:.2f}", f"{r.f1:.2f}",
         _fmt_seconds(r.diff_seconds), _fmt_seconds(r.full_seconds))
        for r in rows
    ]
    widths = [max(len(h), *(len(b[i]) for b in body)) if body else len(h) for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for b in body:
        lines.append("  ".join(v.ljust(w) for v, w in zip(b, widths)).rstrip())
    return "\n".join(lines)
