"""HTTP surface over the session service.

Endpoints:
    POST /sessions                           create + decompose
    GET  /sessions/{sid}                     full tree snapshot
    POST /sessions/{sid}/nodes/{nid}/expand  generate options (?force=true)
    PUT  /sessions/{sid}/nodes/{nid}/selection
    PUT  /sessions/{sid}/preferences         update context + regenerate
    POST /sessions/{sid}/summary
    GET  /healthz

All handlers are synchronous on purpose: the service serializes per-session
mutations itself and FastAPI runs sync handlers on a thread pool, which
gives cross-session and cross-node parallelism for free.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .errors import (
    DecompositionFailed,
    EmptyQuery,
    GenerationFailed,
    IndexOutOfRange,
    NodeBusy,
    OptionsNotReady,
    SubquestError,
    UnknownNode,
    UnknownSession,
)
from .model import ExplorationNode, SessionState
from .service import NodeStatusView, SessionService


class CreateSessionBody(BaseModel):
    query: str
    user_context: str | None = None


class SelectionBody(BaseModel):
    indices: list[int]


class PreferencesBody(BaseModel):
    text: str


def node_to_dict(node: ExplorationNode) -> dict:
    options = None
    option_count = None
    if node.option_set is not None:
        options = {
            "recommended": node.option_set.recommended,
            "options": list(node.option_set.options),
            "warnings": list(node.option_set.warnings),
        }
        option_count = len(node.option_set.selectable())
    return {
        "id": node.id.value,
        "title": node.title,
        "status": node.status.value,
        "error_detail": node.error_detail,
        "selected": sorted(node.selected),
        "option_count": option_count,
        "options": options,
    }


def session_to_dict(state: SessionState) -> dict:
    return {
        "session_id": state.session_id,
        "root": node_to_dict(state.root),
        "children": [node_to_dict(child) for child in state.children],
        "context": {"text": state.context.text, "revision": state.context.revision},
        "max_depth": state.max_depth,
        "summary": state.summary,
        "regen_pending": state.regen_pending,
        "created_at": state.created_at,
        "updated_at": state.updated_at,
    }


def view_to_dict(view: NodeStatusView) -> dict:
    return {
        "id": view.id,
        "title": view.title,
        "status": view.status,
        "option_count": view.option_count,
        "selected": list(view.selected),
        "error_detail": view.error_detail,
    }


_STATUS_BY_ERROR: list[tuple[type[SubquestError], int]] = [
    (UnknownSession, 404),
    (UnknownNode, 404),
    (NodeBusy, 409),
    (EmptyQuery, 422),
    (IndexOutOfRange, 422),
    (OptionsNotReady, 422),
    (DecompositionFailed, 502),
    (GenerationFailed, 502),
]


def create_app(service: SessionService, *, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="subquest", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(SubquestError)
    def _handle_error(request: Request, exc: SubquestError) -> JSONResponse:
        status = 400
        for error_type, code in _STATUS_BY_ERROR:
            if isinstance(exc, error_type):
                status = code
                break
        body = {"detail": str(exc)}
        if isinstance(exc, DecompositionFailed) and exc.session_id:
            body["session_id"] = exc.session_id
        return JSONResponse(status_code=status, content=body)

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody) -> dict:
        state = service.create_session(body.query, body.user_context)
        return session_to_dict(state)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        return session_to_dict(service.get_session(session_id))

    @app.post("/sessions/{session_id}/nodes/{node_id}/expand")
    def expand_node(session_id: str, node_id: str, force: bool = False) -> dict:
        view, option_set = service.expand_node(session_id, node_id, force=force)
        return {
            "node": view_to_dict(view),
            "options": {
                "recommended": option_set.recommended,
                "options": list(option_set.options),
                "warnings": list(option_set.warnings),
            },
        }

    @app.put("/sessions/{session_id}/nodes/{node_id}/selection")
    def set_selection(session_id: str, node_id: str, body: SelectionBody) -> dict:
        view = service.set_node_selection(session_id, node_id, body.indices)
        return {"node": view_to_dict(view)}

    @app.put("/sessions/{session_id}/preferences")
    def update_preferences(session_id: str, body: PreferencesBody) -> dict:
        state = service.update_preferences(session_id, body.text)
        return {"session": session_to_dict(state), "regenerated": True}

    @app.post("/sessions/{session_id}/summary")
    def summarize(session_id: str) -> dict:
        return {"summary": service.summarize(session_id)}

    if ui_dir is not None:
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
