from __future__ import annotations

from fastapi import APIRouter, HTTPException, Request

from app.serving.nrt import CatalogEvent, NrtService
from app.serving.store import ScoreRecord

# No prefix: the suite mounts this at the root
router = APIRouter(tags=["NRT scoring"])


def _service(request: Request) -> NrtService:
    svc = getattr(request.app.state, "nrt", None)
    if svc is None:
        raise HTTPException(status_code=503, detail="NRT service is not configured")
    return svc


@router.post("/events", status_code=202)
def post_event(event: CatalogEvent, request: Request):
    svc = _service(request)
    svc.submit(event)
    return {"accepted": True, "kind": event.kind, "id": event.id}


@router.get("/scores", response_model=ScoreRecord)
def get_score(item_id: int, keyphrase_id: int, request: Request):
    rec = _service(request).processor.get(item_id, keyphrase_id)
    if rec is None:
        raise HTTPException(status_code=404, detail=f"no score for ({item_id}, {keyphrase_id})")
    return rec


@router.get("/stats")
def get_stats(request: Request):
    return _service(request).stats()
