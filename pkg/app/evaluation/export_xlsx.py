from __future__ import annotations

from typing import List

from openpyxl import Workbook
from openpyxl.utils import get_column_letter

from app.evaluation.report import EvalReport


def _finish_sheet(ws, n_cols: int, width: int) -> None:
    for col in range(1, n_cols + 1):
        ws.column_dimensions[get_column_letter(col)].width = width
    ws.freeze_panes = "A2"
    ws.auto_filter.ref = f"A1:{get_column_letter(n_cols)}1"


def _opt(v):
    return "" if v is None else round(v, 4)


def write_report_xlsx(report: EvalReport, out_path: str) -> None:
    wb = Workbook()

    # Sheet 1: Models
    ws = wb.active
    ws.title = "Models"
    headers = ["Model", "Precision", "Recall", "F1", "Diff (s)", "Full (s)", "Gate"]
    ws.append(headers)
    for r in report.rows:
        g = report.gate.get(r.model)
        ws.append([
            r.model,
            round(r.precision, 4),
            round(r.recall, 4),
            round(r.f1, 4),
            _opt(r.diff_seconds),
            _opt(r.full_seconds),
            g.status if g else "",
        ])
    _finish_sheet(ws, len(headers), 16)

    # Sheet 2: Confusion
    ws2 = wb.create_sheet("Confusion")
    headers2 = ["Model", "TP", "FP", "FN", "TN", "Total"]
    ws2.append(headers2)
    for name, c in report.confusion.items():
        ws2.append([name, c.tp, c.fp, c.fn, c.tn, c.total])
    _finish_sheet(ws2, len(headers2), 14)

    # Sheet 3: false negatives by keyphrase length and head/tail
    ws3 = wb.create_sheet("FalseNegatives")
    lengths: List[int] = sorted({n for b in report.fn_by_length.values() for n in b})
    headers3 = ["Model"] + [f"len={n}" for n in lengths] + ["head", "tail"]
    ws3.append(headers3)
    for name in sorted(set(report.fn_by_length) | set(report.fn_head_tail)):
        buckets = report.fn_by_length.get(name, {})
        ht = report.fn_head_tail.get(name, {})
        ws3.append([name] + [buckets.get(n, 0) for n in lengths] + [ht.get("head", 0), ht.get("tail", 0)])
    _finish_sheet(ws3, len(headers3), 12)

    wb.save(out_path)
