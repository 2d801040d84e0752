"""HTTP facade over review sessions, versioned under /api/v1/.

Sessions persist as append-only event logs in the state directory, so a
service restart (or a second process) picks up exactly where ratings left
off. Every rater-facing payload is built from ``ReviewItem.rater_view`` and
therefore never contains the origin field.
"""

from __future__ import annotations

import threading
import uuid
from pathlib import Path

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .review import (
    DIMENSIONS,
    OVERALL_LABELS,
    SCALE_MAX,
    SCALE_MIN,
    DuplicateRatingError,
    ReviewSession,
    SessionClosedError,
    UnknownEntityError,
)
from .errors import ReviewError

RATING_SCHEMA = {
    "overall": list(OVERALL_LABELS),
    "dimensions": list(DIMENSIONS),
    "scale_min": SCALE_MIN,
    "scale_max": SCALE_MAX,
}


class ItemIn(BaseModel):
    report_id: str
    text: str
    findings: str = ""


class SessionCreate(BaseModel):
    generated: list[ItemIn]
    originals: list[ItemIn]
    rater_ids: list[str]
    seed: int = 0
    session_id: str | None = None
    allow_replacement: bool = False


class RatingIn(BaseModel):
    item_id: str
    rater_id: str
    overall: str
    dimensions: dict[str, int] = Field(default_factory=dict)


def create_app(state_dir: str | Path) -> FastAPI:
    state_dir = Path(state_dir)
    state_dir.mkdir(parents=True, exist_ok=True)
    app = FastAPI(title="radsum review service")
    sessions: dict[str, ReviewSession] = {}
    registry_lock = threading.Lock()

    def get_session(session_id: str) -> ReviewSession:
        with registry_lock:
            if session_id not in sessions:
                log_path = state_dir / f"{session_id}.jsonl"
                if not log_path.exists():
                    raise HTTPException(404, f"unknown session {session_id!r}")
                sessions[session_id] = ReviewSession.load(log_path)
            return sessions[session_id]

    @app.post("/api/v1/sessions")
    def create_session_endpoint(body: SessionCreate):
        session_id = body.session_id or uuid.uuid4().hex
        log_path = state_dir / f"{session_id}.jsonl"
        with registry_lock:
            if session_id in sessions or log_path.exists():
                raise HTTPException(409, f"session {session_id!r} already exists")
            try:
                session = ReviewSession.create(
                    generated=[(item.report_id, item.text) for item in body.generated],
                    originals=[(item.report_id, item.text) for item in body.originals],
                    rater_ids=body.rater_ids,
                    seed=body.seed,
                    findings_by_report={
                        item.report_id: item.findings
                        for item in [*body.generated, *body.originals]
                        if item.findings
                    },
                    session_id=session_id,
                    allow_replacement=body.allow_replacement,
                    log_path=log_path,
                )
            except ReviewError as exc:
                raise HTTPException(400, str(exc)) from exc
            sessions[session_id] = session
        return {
            "session_id": session_id,
            "n_items": len(session.order),
            "rater_ids": session.rater_ids,
        }

    @app.get("/api/v1/sessions/{session_id}/items/next")
    def next_item(session_id: str, rater_id: str):
        session = get_session(session_id)
        try:
            item = session.next_unrated(rater_id)
        except UnknownEntityError as exc:
            raise HTTPException(404, str(exc)) from exc
        progress = session.progress()
        rated = progress["per_rater"][rater_id]
        payload = {
            "session_id": session_id,
            "rater_id": rater_id,
            "progress": {"rated": rated, "total": progress["total"]},
            "schema": RATING_SCHEMA,
        }
        if item is None:
            payload["done"] = True
        else:
            payload["done"] = False
            payload["item"] = item.rater_view()
        return payload

    @app.post("/api/v1/sessions/{session_id}/ratings")
    def submit_rating(session_id: str, body: RatingIn):
        session = get_session(session_id)
        try:
            return session.submit(
                item_id=body.item_id,
                rater_id=body.rater_id,
                overall=body.overall,
                dimensions=body.dimensions,
            )
        except DuplicateRatingError as exc:
            raise HTTPException(409, str(exc)) from exc
        except SessionClosedError as exc:
            raise HTTPException(409, str(exc)) from exc
        except UnknownEntityError as exc:
            raise HTTPException(404, str(exc)) from exc
        except ReviewError as exc:
            raise HTTPException(400, str(exc)) from exc

    @app.get("/api/v1/sessions/{session_id}/progress")
    def session_progress(session_id: str):
        return get_session(session_id).progress()

    @app.get("/api/v1/sessions/{session_id}/summary")
    def session_summary(session_id: str):
        try:
            return get_session(session_id).aggregate().to_dict()
        except ReviewError as exc:
            raise HTTPException(400, str(exc)) from exc

    @app.post("/api/v1/sessions/{session_id}/close")
    def close_session(session_id: str):
        session = get_session(session_id)
        session.close()
        return {"session_id": session_id, "closed": True}

    return app
