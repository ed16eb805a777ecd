from __future__ import annotations

import logging
import os
from contextlib import asynccontextmanager
from typing import Optional

from fastapi import FastAPI, HTTPException, Request, Response

from app.evaluation.render import render_report
from app.evaluation.report import EvalReport
from app.runs.store import RunPaths
from app.serving.nrt import NrtService
from app.serving.router import router as nrt_router

logger = logging.getLogger(__name__)

RUNS_DIR = os.getenv("KPALIGN_RUNS_DIR", "runs")


def create_app(service: Optional[NrtService] = None, runs_dir: Optional[str] = None) -> FastAPI:
    """
    Suite app: the NRT scoring routes plus read-only report pages for runs.
    The NRT worker thread is started and stopped with the app lifespan.
    """

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        if service is not None:
            service.start()
            logger.info("NRT service started (window %d ms)", service.window_ms)
        yield
        if service is not None:
            service.stop()
            logger.info("NRT service stopped")

    suite = FastAPI(title="Keyphrase Alignment Suite", lifespan=lifespan)
    suite.state.nrt = service
    suite.state.runs_dir = runs_dir or RUNS_DIR

    # Health endpoints (GET + HEAD)
    @suite.get("/healthz")
    def healthz_get():
        return {"status": "ok", "nrt": service is not None}

    @suite.head("/healthz")
    def healthz_head():
        return Response(status_code=200)

    @suite.get("/runs/{run_id}/report")
    def run_report(run_id: str, request: Request):
        if run_id in (".", "..") or os.sep in run_id:
            raise HTTPException(status_code=404, detail="run not found")
        path = RunPaths(run_id=run_id, base_dir=request.app.state.runs_dir).report_json_path
        if not os.path.exists(path):
            raise HTTPException(status_code=404, detail=f"no report for run {run_id}")
        with open(path, "r", encoding="utf-8") as f:
            report = EvalReport.model_validate_json(f.read())
        return render_report(request, report)

    # API routers (services, NOT apps)
    suite.include_router(nrt_router)
    return suite


app = create_app()
