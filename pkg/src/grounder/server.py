"""HTTP session API for live teaching clients.

A thin wire adapter over one Agent instance: requests carry user inputs,
responses carry tagged AgentReply JSON (replyType matches the in-process
variant names exactly). All mutations funnel through a single writer lock;
phase mismatches return 409 and leave no trace on the agent.
"""

from __future__ import annotations

import threading

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .agent import (
    Agent,
    AwaitOptionChoice,
    AwaitRephrase,
    AwaitSideAnswer,
    AwaitSlot,
    PhaseError,
    Session,
    reply_to_wire,
)
from .commands import pattern_text
from .persistence import save_snapshot


class NewSession(BaseModel):
    userId: str


class UtteranceBody(BaseModel):
    text: str


class ChoiceBody(BaseModel):
    index: int | None = None


class SlotBody(BaseModel):
    argName: str
    text: str


class SideBody(BaseModel):
    vote: str | None = None
    answer: str | None = None


def _pending(session: Session) -> dict | None:
    """What the client should render as the actionable prompt, if anything."""
    phase = session.phase
    if isinstance(phase, AwaitOptionChoice):
        options = [
            e for e in session.transcript if e["kind"] == "options_offered"
        ][-1]["options"]
        return {"kind": "options", "options": options}
    if isinstance(phase, AwaitRephrase):
        return {"kind": "rephrase"}
    if isinstance(phase, AwaitSlot):
        return {"kind": "slot", "argName": phase.pending[0]}
    if isinstance(phase, AwaitSideAnswer):
        side = phase.side
        if side.kind == "verify":
            return {"kind": "verify", "question": side.question,
                    "factRef": side.fact_id}
        return {"kind": "deferred", "question": side.question,
                "questionRef": side.deferred_id}
    return None


class SessionNotFound(Exception):
    pass


def create_app(
    agent: Agent, snapshot_path: str | None = None, ui_dir: str | None = None
) -> FastAPI:
    app = FastAPI(title="grounder", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    lock = threading.Lock()

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": "malformed body"})

    @app.exception_handler(PhaseError)
    async def phase_mismatch(request: Request, exc: PhaseError):
        return JSONResponse(status_code=409, content={"error": str(exc)})

    @app.exception_handler(ValueError)
    async def bad_value(request: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(SessionNotFound)
    async def no_session(request: Request, exc: SessionNotFound):
        return JSONResponse(status_code=404, content={"error": "unknown session"})

    def get_session(session_id: str) -> Session:
        try:
            return agent.session(session_id)
        except KeyError:
            raise SessionNotFound(session_id) from None

    def persist() -> None:
        if snapshot_path is not None:
            save_snapshot(agent, snapshot_path)

    @app.post("/sessions")
    def new_session(body: NewSession):
        with lock:
            session = agent.new_session(body.userId)
        return {"sessionId": session.id}

    @app.get("/sessions/{session_id}")
    def session_state(session_id: str):
        session = get_session(session_id)
        return {
            "sessionId": session.id,
            "userId": session.user_id,
            "phase": session.phase.name,
            "pending": _pending(session),
            "transcript": session.transcript,
        }

    @app.post("/sessions/{session_id}/utterance")
    def utterance(session_id: str, body: UtteranceBody):
        session = get_session(session_id)
        with lock:
            reply = agent.utterance(session, body.text)
            persist()
        return reply_to_wire(reply)

    @app.post("/sessions/{session_id}/choice")
    def choice(session_id: str, body: ChoiceBody):
        session = get_session(session_id)
        with lock:
            reply = agent.on_option_choice(session, body.index)
            persist()
        return reply_to_wire(reply)

    @app.post("/sessions/{session_id}/slot")
    def slot(session_id: str, body: SlotBody):
        session = get_session(session_id)
        with lock:
            reply = agent.on_slot_answer(session, body.argName, body.text)
            persist()
        return reply_to_wire(reply)

    @app.post("/sessions/{session_id}/side")
    def side(session_id: str, body: SideBody):
        session = get_session(session_id)
        with lock:
            reply = agent.on_side_answer(session, vote=body.vote, answer=body.answer)
            persist()
        return reply_to_wire(reply)

    @app.get("/store/seed-commands")
    def seed_commands():
        return [
            {
                "id": sc.id,
                "pattern": pattern_text(sc.pattern),
                "action": sc.action_id,
                "taskId": sc.task_id,
                "provenance": sc.provenance.kind,
                "user": sc.provenance.user_id,
                "alwaysElicit": sorted(sc.always_elicit),
            }
            for sc in agent.store
        ]

    @app.get("/kb/facts")
    def facts():
        return [
            {
                "id": fact.id,
                "head": " ".join(fact.head),
                "relation": fact.relation,
                "tail": " ".join(fact.tail),
                "status": fact.status,
                "text": fact.text(),
                "yesVotes": len(fact.yes_voters),
                "noVotes": len(fact.no_voters),
            }
            for fact in agent.kb.facts
        ]

    @app.get("/metrics")
    def metrics():
        return {"records": agent.metrics}

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
