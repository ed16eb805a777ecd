from pathlib import Path
from typing import Any, Dict, Optional

from fastapi import Request
from fastapi.responses import Response
from fastapi.templating import Jinja2Templates

from app.evaluation.report import EvalReport


# Always resolve templates relative to this file
TEMPLATES_DIR = Path(__file__).resolve().parent / "templates"
templates = Jinja2Templates(directory=str(TEMPLATES_DIR))


def _report_context(report: EvalReport) -> Dict[str, Any]:
    lengths = sorted({n for b in report.fn_by_length.values() for n in b})
    return {"report": report, "lengths": lengths}


def render(
    request: Request,
    template_name: str,
    context: Optional[Dict[str, Any]] = None,
    status_code: int = 200,
) -> Response:
    """
    Render a Jinja2 template with FastAPI request injected.
    """
    ctx: Dict[str, Any] = {"request": request}
    if context:
        ctx.update(context)

    return templates.TemplateResponse(
        request=request,
        name=template_name,
        context=ctx,
        status_code=status_code,
    )


def render_report(request: Request, report: EvalReport) -> Response:
    return render(request, "report.html", _report_context(report))


def render_report_html(report: EvalReport) -> str:
    """Same template, rendered without a request for files written by the CLI."""
    return templates.get_template("report.html").render(**_report_context(report))


def write_report_html(report: EvalReport, out_path: str) -> None:
    with open(out_path, "w", encoding="utf-8") as f:
        f.write(render_report_html(report))
