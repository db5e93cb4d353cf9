"""JSON-over-HTTP session API for the audit-board UI.

One JSON file per session under the data directory; every mutation rewrites
the file atomically.  Mutations to a single session are serialized behind a
per-session lock; different sessions are independent.  If a shared token is
configured, every request must carry it in ``X-Audit-Token``.

Endpoints:
  POST /sessions                                create from config + files
  GET  /sessions/{id}                           status envelope
  POST /sessions/{id}/rounds                    plan the next round
  GET  /sessions/{id}/rounds/{n}/cards          retrieval list by cart/tray
  POST /sessions/{id}/rounds/{n}/interpretations one card reading
  POST /sessions/{id}/rounds/{n}/finalize       close the round
  GET  /sessions/{id}/report                    full per-contest report
"""

from __future__ import annotations

import os
import threading
from collections import defaultdict
from typing import Optional

from fastapi import Depends, FastAPI, Header, HTTPException
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import engine as eng
from .errors import AuditError
from .session import Session, real_str

_STATUS_BY_CODE = {
    "SESSION_NOT_FOUND": 404,
    "UNKNOWN_CASE": 404,
    "UNEXPECTED_CARD": 409,
    "ROUND_INCOMPLETE": 409,
    "ROUND_STATE": 409,
    "OUTCOME_NOT_CONFIRMABLE": 409,
    "SESSION_TAMPERED": 409,
}


class CreateSessionRequest(BaseModel):
    config: dict
    manifest_csv: str
    csd_csv: str
    cvrs_jsonl: str = ""
    contests: list[dict] = Field(min_length=1)


class InterpretationRequest(BaseModel):
    card_id: str
    not_found: bool = False
    readings: dict[str, object] = Field(default_factory=dict)


class SessionStore:
    def __init__(self, data_dir: str):
        self.data_dir = data_dir
        os.makedirs(data_dir, exist_ok=True)
        self._locks: dict[str, threading.Lock] = defaultdict(threading.Lock)
        self._guard = threading.Lock()

    def path(self, session_id: str) -> str:
        safe = "".join(ch for ch in session_id if ch.isalnum() or ch in "-_")
        return os.path.join(self.data_dir, f"{safe}.json")

    def lock(self, session_id: str) -> threading.Lock:
        with self._guard:
            return self._locks[session_id]

    def load(self, session_id: str) -> Session:
        path = self.path(session_id)
        if not os.path.exists(path):
            raise HTTPException(404, detail={"error": "SESSION_NOT_FOUND",
                                             "message": f"no session {session_id}"})
        return Session.load(path)

    def save(self, session: Session) -> None:
        session.save(self.path(session.session_id))


def _round_payload(session: Session, rnd: eng.Round) -> dict:
    state = session.state
    groups: dict = {}
    for ref in rnd.retrieval:
        cart = "phantom" if ref.is_phantom else str(ref.cart)
        tray = "phantom" if ref.is_phantom else str(ref.tray)
        groups.setdefault(cart, {}).setdefault(tray, []).append({
            "card_id": ref.card_id,
            "position": ref.position,
            "is_phantom": ref.is_phantom,
            "contests": sorted(state.csd.styles.get(ref.card_id, ()) & set(rnd.sizes)),
            "recorded": ref.card_id in rnd.interpretations,
        })
    return {
        "round": rnd.number,
        "sizes": dict(sorted(rnd.sizes.items())),
        "full_count": rnd.new_full_count,
        "finalized": rnd.finalized,
        "cards_total": len(rnd.retrieval),
        "cards_recorded": len(rnd.interpretations),
        "groups": groups,
    }


def _status_payload(session: Session) -> dict:
    status = eng.audit_status(session.state)
    for entry in status["contests"].values():
        entry["measured_risk"] = real_str(entry["measured_risk"])
        entry["risk_limit"] = real_str(entry["risk_limit"])
        entry["governing_margin"] = real_str(entry["governing_margin"])
    return status


def create_app(data_dir: str, token: Optional[str] = None,
               ui_dir: Optional[str] = None) -> FastAPI:
    store = SessionStore(data_dir)

    def check_token(x_audit_token: Optional[str] = Header(default=None)):
        if token and x_audit_token != token:
            raise HTTPException(401, detail={"error": "BAD_TOKEN",
                                             "message": "missing or wrong X-Audit-Token"})

    app = FastAPI(title="rlacsd session API", dependencies=[Depends(check_token)])

    @app.exception_handler(AuditError)
    async def audit_error_handler(_, exc: AuditError):
        return JSONResponse(status_code=_STATUS_BY_CODE.get(exc.code, 422),
                            content=exc.to_json())

    @app.post("/sessions")
    def create_session(req: CreateSessionRequest):
        import json as _json
        config = eng.AuditConfig.from_dict(req.config)
        session = Session.create(config, req.manifest_csv, req.csd_csv,
                                 req.cvrs_jsonl, _json.dumps(req.contests))
        existing = store.path(session.session_id)
        if not os.path.exists(existing):
            store.save(session)
        return session.envelope()

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return store.load(session_id).envelope()

    @app.post("/sessions/{session_id}/rounds")
    def plan_next_round(session_id: str):
        with store.lock(session_id):
            session = store.load(session_id)
            rnd = eng.plan_round(session.state)
            store.save(session)
            return _round_payload(session, rnd)

    def _get_round(session: Session, number: int) -> eng.Round:
        if not 1 <= number <= len(session.state.rounds):
            raise HTTPException(404, detail={"error": "ROUND_NOT_FOUND",
                                             "message": f"no round {number}"})
        return session.state.rounds[number - 1]

    @app.get("/sessions/{session_id}/rounds/{number}/cards")
    def round_cards(session_id: str, number: int):
        session = store.load(session_id)
        return _round_payload(session, _get_round(session, number))

    @app.post("/sessions/{session_id}/rounds/{number}/interpretations")
    def record(session_id: str, number: int, req: InterpretationRequest):
        with store.lock(session_id):
            session = store.load(session_id)
            rnd = _get_round(session, number)
            if rnd.finalized or rnd is not session.state.open_round:
                raise HTTPException(409, detail={"error": "ROUND_STATE",
                                                 "message": f"round {number} is closed"})
            interp = eng.Interpretation.from_dict(req.model_dump())
            eng.record_interpretation(session.state, interp)
            store.save(session)
            return {"recorded": interp.card_id,
                    "cards_recorded": len(rnd.interpretations),
                    "cards_total": len(rnd.retrieval)}

    @app.post("/sessions/{session_id}/rounds/{number}/finalize")
    def finalize(session_id: str, number: int):
        with store.lock(session_id):
            session = store.load(session_id)
            rnd = _get_round(session, number)
            if rnd.finalized or rnd is not session.state.open_round:
                raise HTTPException(409, detail={"error": "ROUND_STATE",
                                                 "message": f"round {number} is closed"})
            result = eng.finalize_round(session.state)
            store.save(session)
            return {"round": number,
                    "result": {k: {**v, "risk": real_str(v["risk"])}
                               for k, v in sorted(result.items())},
                    "status": _status_payload(session)}

    @app.get("/sessions/{session_id}/report")
    def report(session_id: str):
        session = store.load(session_id)
        return {
            "envelope": session.envelope(),
            "status": _status_payload(session),
            "contest_definitions": [c.to_dict()
                                    for c in session.state.contests.values()],
            "rounds": [_round_payload(session, rnd) for rnd in session.state.rounds],
            "results": [
                {k: {**v, "risk": real_str(v["risk"])} for k, v in sorted(rnd.result.items())}
                if rnd.result is not None else None
                for rnd in session.state.rounds],
        }

    if ui_dir and os.path.isdir(ui_dir):
        from fastapi.staticfiles import StaticFiles
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
