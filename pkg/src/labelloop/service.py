"""HTTP/JSON service for live annotation sessions.

Endpoints:
    POST /sessions                  create a session (idempotency-key aware)
    GET  /sessions/{id}/query       the pending batch to label
    POST /sessions/{id}/labels      submit (partial) labels for the batch
    GET  /sessions/{id}/metrics     phase, learning curve, pseudo-counts
    GET  /sessions/{id}/export      full curve document for download

The engine advances asynchronously once a batch completes; clients poll the
metrics endpoint for the phase. The data directory (sessions event logs and
file-backed datasets) comes from the ``LABELLOOP_DATA_DIR`` environment
variable unless given explicitly.
"""

from __future__ import annotations

import os
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .config import ConfigError
from .data import DatasetError, resolve_dataset
from .sessions import SessionError, SessionStore

DATA_DIR_ENV = "LABELLOOP_DATA_DIR"


class CreateSessionRequest(BaseModel):
    dataset: str
    config: dict = Field(default_factory=dict)
    idempotency_key: str | None = None
    seed_labels: list[tuple[int, int]] | None = None
    reveal_predictions: bool = False


class SubmitLabelsRequest(BaseModel):
    labels: list[tuple[int, int]]


def create_app(data_dir: str | Path | None = None, async_advance: bool = True) -> FastAPI:
    if data_dir is None:
        data_dir = os.environ.get(DATA_DIR_ENV)
    data_path = Path(data_dir) if data_dir else None

    # cache resolved datasets; a dataset is immutable so sharing is safe
    cache: dict[str, object] = {}

    def resolver(ref: str):
        if ref not in cache:
            cache[ref] = resolve_dataset(ref, data_path)
        return cache[ref]

    store = SessionStore(data_path, resolver, async_advance=async_advance)

    app = FastAPI(title="labelloop", version="0.1.0")
    app.state.store = store
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(SessionError)
    async def session_error(request: Request, exc: SessionError):
        return JSONResponse(status_code=exc.status_code, content={"detail": str(exc)})

    @app.exception_handler(DatasetError)
    async def dataset_error(request: Request, exc: DatasetError):
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    @app.exception_handler(ConfigError)
    async def config_error(request: Request, exc: ConfigError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionRequest):
        session, created = store.create(
            body.dataset, body.config, body.idempotency_key, body.seed_labels,
            reveal_predictions=body.reveal_predictions,
        )
        payload = {"session_id": session.session_id, "phase": session.phase.value}
        if session.phase.value == "awaiting-labels":
            payload["pending"] = session.pending_batch()
        return JSONResponse(status_code=201 if created else 200, content=payload)

    @app.get("/sessions/{session_id}/query")
    def get_query_batch(session_id: str):
        return store.get(session_id).pending_batch()

    @app.post("/sessions/{session_id}/labels")
    def submit_labels(session_id: str, body: SubmitLabelsRequest):
        return store.get(session_id).submit_labels([(int(i), int(l)) for i, l in body.labels])

    @app.get("/sessions/{session_id}/metrics")
    def get_metrics(session_id: str):
        return store.get(session_id).metrics()

    @app.get("/sessions/{session_id}/export")
    def export_session(session_id: str):
        return store.get(session_id).export()

    return app


def default_app() -> FastAPI:
    return create_app()
