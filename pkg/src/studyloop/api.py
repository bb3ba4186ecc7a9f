"""HTTP+JSON surface over the engine.

Each endpoint delegates to exactly one engine operation; bodies mirror
the domain types and module errors map onto 4xx/5xx as {code, message}.
An optional static bearer token guards everything when configured.
"""
from __future__ import annotations

import os
from typing import Dict, List, Optional

from fastapi import Depends, FastAPI, Header, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .core import (
    AuthorizationError,
    ConfigurationError,
    ConflictError,
    EngineError,
    IllegalTransition,
    NotFoundError,
    ValidationError,
)
from .engine import Engine

_STATUS = (
    (NotFoundError, 404, "not_found"),
    (AuthorizationError, 403, "forbidden"),
    (ConflictError, 409, "conflict"),
    (IllegalTransition, 409, "illegal_transition"),
    (ValidationError, 422, "validation"),
    (ConfigurationError, 500, "configuration"),
)


def _status_of(exc: EngineError):
    for kind, code, label in _STATUS:
        if isinstance(exc, kind):
            return code, label
    return 500, "engine"


class StudentBody(BaseModel):
    display_name: str
    timezone: str = "UTC"
    classes: List[str] = Field(default_factory=list)
    share_schedule: bool = False
    student_id: Optional[str] = None


class TimetableBody(BaseModel):
    blocks: List[dict]


class PreferenceBody(BaseModel):
    preference: str


class AcceptSuggestionBody(BaseModel):
    class_id: str
    day: int
    start: int


class CheckoutBody(BaseModel):
    effectiveness: int
    environment: int


class NoteBody(BaseModel):
    class_id: str
    week: str
    text: str


class ResponsesBody(BaseModel):
    responses: Dict[str, int]


class GroupBody(BaseModel):
    created_by: str
    members: List[str]
    class_id: str
    topic: str


class GroupRatingsBody(BaseModel):
    rater: str
    ratings: Dict[str, int]


class EndorseBody(BaseModel):
    from_student: str
    to_student: str


class TtmScoresBody(BaseModel):
    attempts: List[dict]


def create_app(engine: Engine, webapp_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="studyloop", version="0.1.0")
    app.state.engine = engine
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    if webapp_dir and os.path.isfile(os.path.join(webapp_dir, "index.html")):
        app.mount("/app", StaticFiles(directory=webapp_dir, html=True), name="webapp")

    def require_token(authorization: Optional[str] = Header(default=None)) -> None:
        token = engine.config.api_token
        if token is None:
            return
        if authorization != f"Bearer {token}":
            raise AuthorizationError("missing or invalid API token")

    guard = Depends(require_token)

    @app.exception_handler(EngineError)
    async def engine_error_handler(request: Request, exc: EngineError):
        code, label = _status_of(exc)
        return JSONResponse(status_code=code, content={"code": label, "message": str(exc)})

    # ------------------------------------------------------------- students

    @app.post("/students", status_code=201, dependencies=[guard])
    def create_student(body: StudentBody):
        record = engine.create_student(
            display_name=body.display_name,
            timezone=body.timezone,
            classes=body.classes,
            share_schedule=body.share_schedule,
            student_id=body.student_id,
        )
        return record.to_public_json()

    @app.get("/students/{student_id}", dependencies=[guard])
    def get_student(student_id: str):
        return engine.get_student(student_id).to_public_json()

    # --------------------------------------------------------------- wizard

    @app.put("/students/{student_id}/timetable", dependencies=[guard])
    def put_timetable(student_id: str, body: TimetableBody):
        timetable = engine.set_timetable(student_id, body.blocks)
        return timetable.to_json()

    @app.put("/students/{student_id}/preference", dependencies=[guard])
    def put_preference(student_id: str, body: PreferenceBody):
        pref = engine.set_preference(student_id, body.preference)
        return {"student_id": student_id, "preference": pref.value}

    @app.get("/students/{student_id}/schedule/suggestions", dependencies=[guard])
    def get_suggestions(student_id: str, reject: List[str] = Query(default=[])):
        rejects: Dict[str, List] = {}
        for token in reject or ():
            try:
                class_id, day, start = token.split(":")
                rejects.setdefault(class_id, []).append((int(day), int(start)))
            except ValueError:
                raise ValidationError(f"bad reject token {token!r}, want class:day:start")
        suggestions, unschedulable = engine.schedule_suggestions(student_id, rejects)
        return {
            "suggestions": [s.to_json() for s in suggestions],
            "unschedulable": unschedulable,
        }

    @app.post("/students/{student_id}/sessions", status_code=201, dependencies=[guard])
    def accept_suggestion(student_id: str, body: AcceptSuggestionBody):
        session = engine.accept_suggestion(student_id, body.class_id, body.day, body.start)
        return session.to_json()

    @app.get("/students/{student_id}/sessions", dependencies=[guard])
    def list_sessions(student_id: str, week: Optional[str] = None):
        engine.get_student(student_id)
        return {"sessions": [s.to_json() for s in engine.store.sessions_of(student_id, week)]}

    # -------------------------------------------------------------- sessions

    @app.post("/sessions/{session_id}/checkin", dependencies=[guard])
    def checkin(session_id: str):
        return engine.check_in(session_id).to_json()

    @app.post("/sessions/{session_id}/checkout", dependencies=[guard])
    def checkout(session_id: str, body: CheckoutBody):
        return engine.check_out(session_id, body.effectiveness, body.environment).to_json()

    # ------------------------------------------------------------- checklist

    @app.get("/students/{student_id}/checklist/{week}", dependencies=[guard])
    def get_checklist(student_id: str, week: str):
        checklists = engine.get_checklists(student_id, week)
        return {"week": week, "checklists": [c.to_json() for c in checklists]}

    @app.post("/checklist/items/{item_id}/tick", dependencies=[guard])
    def tick_item(item_id: str):
        result = engine.tick_item(item_id)
        return {
            "item_id": item_id,
            "changed": result.changed,
            "progress": result.progress_after,
            "band": result.band_after,
            "crossed_band": result.crossed_band,
            "completed": result.completed,
        }

    @app.post("/students/{student_id}/notes", status_code=201, dependencies=[guard])
    def submit_note(student_id: str, body: NoteBody):
        return engine.submit_note(student_id, body.class_id, body.week, body.text)

    # ------------------------------------------------------------ group study

    @app.get("/students/{student_id}/partners/suggestions", dependencies=[guard])
    def partner_suggestions(student_id: str, class_id: str, topic: str):
        return engine.partner_suggestions(student_id, class_id, topic)

    @app.post("/study-groups", status_code=201, dependencies=[guard])
    def create_group(body: GroupBody):
        group = engine.create_group(body.created_by, body.members, body.class_id, body.topic)
        return group.to_json()

    @app.post("/study-groups/{group_id}/ratings", dependencies=[guard])
    def rate_group(group_id: str, body: GroupRatingsBody):
        group = engine.rate_group(group_id, body.rater, body.ratings)
        return group.to_json()

    @app.post("/study-groups/{group_id}/endorse", status_code=201, dependencies=[guard])
    def endorse(group_id: str, body: EndorseBody):
        endorsement = engine.endorse(group_id, body.from_student, body.to_student)
        return endorsement.to_json()

    # ----------------------------------------------------------- feed/metrics

    @app.get("/students/{student_id}/feed", dependencies=[guard])
    def feed(student_id: str):
        return {"items": engine.feed(student_id)}

    @app.get("/students/{student_id}/metrics", dependencies=[guard])
    def metrics(student_id: str):
        return engine.metrics(student_id)

    # -------------------------------------------------------- instructor side

    @app.post("/ttm/scores", dependencies=[guard])
    def ingest_scores(body: TtmScoresBody):
        return engine.ingest_attempts(body.attempts).to_json()

    @app.put("/classes/{class_id}/materials/{week}", dependencies=[guard])
    def put_materials(class_id: str, week: str, manifest: dict):
        return engine.put_manifest(class_id, week, manifest).to_json()

    # ------------------------------------------------------------ responses

    @app.post("/students/{student_id}/responses", dependencies=[guard])
    def record_responses(student_id: str, body: ResponsesBody):
        stored = engine.record_responses(student_id, body.responses)
        return {"student_id": student_id, "responses": stored}

    @app.get("/students/{student_id}/performance", dependencies=[guard])
    def performance_scores(student_id: str):
        return {
            "student_id": student_id,
            "scores": engine.performance_scores(student_id),
            "target_category": engine.target_category(student_id).value,
        }

    return app
