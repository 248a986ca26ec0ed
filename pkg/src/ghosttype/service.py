"""JSON-over-HTTP wire protocol for the typing study.

Endpoints (all JSON):
  GET  /health                      -> {"status": "ok"}
  POST /sessions                    -> session view
  GET  /sessions/{sid}              -> session view (resume)
  GET  /sessions/{sid}/prompt       -> current prompt + condition
  POST /sessions/{sid}/suggest      -> {"suggestion": {...} | null}
  POST /sessions/{sid}/events       -> {"applied": n, "last_seq": s}  (idempotent)
  POST /sessions/{sid}/advance      -> prompt verification + cursor move
  GET  /sessions/{sid}/replay       -> per-prompt reconstruction audit
  GET  /sessions/{sid}/analysis     -> load estimate + fatigue + rates
  GET  /analysis                    -> pooled analysis over all sessions
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from .errors import ConfigError, OrderingError, SessionError
from .study import KeyEvent, StudyServer, analysis_document, replay_events


class CreateSessionBody(BaseModel):
    participant: str
    prompts: Optional[list[str]] = None
    policy: Optional[str] = None
    seed: int = 0


class SuggestBody(BaseModel):
    context: str


class EventBody(BaseModel):
    seq: int
    timestamp_ms: float
    key: str
    context: str
    suggestion: Optional[dict] = None
    accepted: bool = False


class EventBatchBody(BaseModel):
    events: list[EventBody] = Field(default_factory=list)


class AdvanceBody(BaseModel):
    typed: str


def create_app(server: StudyServer) -> FastAPI:
    app = FastAPI(title="ghosttype typing study")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.server = server

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/sessions")
    def create_session(body: CreateSessionBody):
        try:
            session = server.create_session(
                body.participant, body.prompts, body.policy, body.seed
            )
        except ConfigError as e:
            raise HTTPException(status_code=422, detail=str(e))
        return server.session_view(session.id)

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        _session(sid)
        return server.session_view(sid)

    def _session(sid: str):
        try:
            return server.get_session(sid)
        except SessionError as e:
            raise HTTPException(status_code=404, detail=str(e))

    @app.get("/sessions/{sid}/prompt")
    def get_prompt(sid: str):
        _session(sid)
        return server.current_prompt(sid)

    @app.post("/sessions/{sid}/suggest")
    def post_suggest(sid: str, body: SuggestBody):
        _session(sid)
        try:
            view = server.suggest(sid, body.context)
        except SessionError as e:
            raise HTTPException(status_code=409, detail=str(e))
        return {"suggestion": view.to_json() if view else None}

    @app.post("/sessions/{sid}/events")
    def post_events(sid: str, body: EventBatchBody):
        _session(sid)
        events = [
            KeyEvent.from_json(
                {
                    "seq": e.seq,
                    "timestamp_ms": e.timestamp_ms,
                    "key": e.key,
                    "context": e.context,
                    "suggestion": e.suggestion,
                    "accepted": e.accepted,
                }
            )
            for e in body.events
        ]
        try:
            return server.record_events(sid, events)
        except OrderingError as e:
            raise HTTPException(status_code=409, detail=str(e))
        except (ValueError, SessionError) as e:
            raise HTTPException(status_code=422, detail=str(e))

    @app.post("/sessions/{sid}/advance")
    def post_advance(sid: str, body: AdvanceBody):
        _session(sid)
        try:
            result = server.advance(sid, body.typed)
        except SessionError as e:
            raise HTTPException(status_code=409, detail=str(e))
        if not result["ok"]:
            raise HTTPException(status_code=409, detail=result)
        return result

    @app.get("/sessions/{sid}/replay")
    def get_replay(sid: str):
        _session(sid)
        log = server.session_log(sid)
        return {
            "prompts": [
                {
                    "condition": run.condition,
                    "prompt": run.prompt,
                    "reconstructed": replay_events(run.events),
                    "ok": replay_events(run.events) == run.prompt,
                }
                for run in log.runs
            ]
        }

    @app.get("/sessions/{sid}/analysis")
    def get_analysis(sid: str):
        _session(sid)
        return analysis_document([server.session_log(sid)])

    @app.get("/analysis")
    def get_all_analysis():
        return analysis_document(server.all_logs())

    return app
