"""HTTP facade over spaces and exploration sessions.

Long re-cluster cycles run on a worker thread per session (single writer);
reads are served from an immutable snapshot taken after each applied event,
so the service stays responsive while a cycle computes. Progress and state
version bumps stream over server-sent events.
"""

from __future__ import annotations

import json
import queue
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI
from fastapi.responses import JSONResponse, Response, StreamingResponse

from .. import ingest
from ..cluster import Cluster
from ..config import EngineConfig
from ..core import SolutionSpace
from ..errors import (BusyError, ConflictError, ContractError, IngestError,
                      NotFoundError, SolspaceError)
from ..session import ExplorationSession, SessionEvent, table_model
from . import schemas

STREAM_POLL_SECONDS = 2.0


@dataclass
class SpaceEntry:
    space_id: str
    space: SolutionSpace
    root: Optional[Path]  # dataset directory, when loaded from disk


class SessionEntry:
    def __init__(self, session_id: str, space_id: str, session: ExplorationSession):
        self.session_id = session_id
        self.space_id = space_id
        self.session = session
        self.lock = threading.Lock()
        self.busy = False
        self.snapshot: Optional[schemas.SessionState] = None
        self.snapshot_survivors: Optional[np.ndarray] = None
        self.listeners: list[queue.Queue] = []

    def publish(self, event: dict) -> None:
        for q in list(self.listeners):
            q.put(event)

    def take_snapshot(self) -> None:
        self.snapshot = _materialize_state(self)
        self.snapshot_survivors = self.session.survivors.copy()


def _cluster_payload(c: Cluster, space: SolutionSpace) -> schemas.ClusterPayload:
    return schemas.ClusterPayload(
        id=c.id,
        members=[space.solutions[m].id for m in c.members],
        representative=space.solutions[c.representative].id,
        children=[_cluster_payload(ch, space) for ch in c.children or ()],
    )


def _materialize_state(entry: SessionEntry) -> schemas.SessionState:
    s = entry.session
    layout = None
    if s.layout is not None:
        layout = schemas.LayoutPayload(
            star_ids=list(s.layout.star_ids),
            stars=[tuple(p) for p in s.layout.star_positions.tolist()],
            tables=list(s.layout.tables),
            room=s.layout.room,
            sky_height=s.layout.sky_height,
            table_height=s.layout.table_height,
        )
    return schemas.SessionState(
        session_id=entry.session_id,
        space_id=entry.space_id,
        version=s.version,
        cycle=s.cycle,
        busy=entry.busy,
        embedding_method=s.config.embedding,
        seeds=s.seed_ids(),
        survivor_count=len(s.survivors),
        metric_channels=list(s.space.metric_channels),
        lod_thresholds=(s.config.lod_full, s.config.lod_representative),
        clusters=[_cluster_payload(c, s.space) for c in (s.tree.roots if s.tree else ())],
        layout=layout,
    )


def _error_response(code: str, message: str, status: int) -> JSONResponse:
    body = schemas.ErrorResponse(error=schemas.ApiError(code=code, message=message))
    return JSONResponse(status_code=status, content=body.model_dump())


_ERROR_MAP = [
    (NotFoundError, "not_found", 404),
    (ConflictError, "conflict", 409),
    (BusyError, "busy", 409),
    (IngestError, "validation", 422),
    (ContractError, "validation", 422),
]


def _map_error(exc: Exception) -> JSONResponse:
    for etype, code, status in _ERROR_MAP:
        if isinstance(exc, etype):
            return _error_response(code, str(exc), status)
    return _error_response("internal", str(exc), 500)


def create_app(data_root: str = ".", config: EngineConfig | None = None) -> FastAPI:
    app = FastAPI(title="solspace", version="0.1.0")
    default_config = config or EngineConfig()
    data_root_path = Path(data_root)

    spaces: dict[str, SpaceEntry] = {}
    loaded_paths: dict[str, str] = {}
    sessions: dict[str, SessionEntry] = {}
    registry_lock = threading.Lock()
    counters = {"space": 0, "session": 0}

    @app.exception_handler(SolspaceError)
    async def _solspace_error(request, exc):
        return _map_error(exc)

    def _get_space(space_id: str) -> SpaceEntry:
        if space_id not in spaces:
            raise NotFoundError(f"unknown space id {space_id!r}")
        return spaces[space_id]

    def _get_session(session_id: str) -> SessionEntry:
        if session_id not in sessions:
            raise NotFoundError(f"unknown session id {session_id!r}")
        return sessions[session_id]

    # -- spaces --------------------------------------------------------------

    @app.post("/spaces", response_model=schemas.SpaceCreateResponse,
              responses={409: {"model": schemas.ErrorResponse}})
    def create_space(req: schemas.SpaceCreateRequest):
        path = Path(req.dataset_path)
        if not path.is_absolute():
            path = data_root_path / path
        key = str(path.resolve())
        with registry_lock:
            if key in loaded_paths:
                raise ConflictError(f"dataset already loaded as {loaded_paths[key]}")
        if str(path).endswith(".npz"):
            space, root = ingest.load_space(path), None
        else:
            space = ingest.load_dataset(path, descriptor_pairs=req.descriptor_pairs)
            root = path
        with registry_lock:
            counters["space"] += 1
            sid = f"sp{counters['space']}"
            spaces[sid] = SpaceEntry(space_id=sid, space=space, root=root)
            loaded_paths[key] = sid
        return schemas.SpaceCreateResponse(
            space_id=sid, n=len(space), channels=list(space.metric_channels))

    @app.get("/spaces/{space_id}/solutions/{solution_id}/mesh")
    def get_mesh(space_id: str, solution_id: str):
        entry = _get_space(space_id)
        idx = None
        try:
            idx = entry.space.index_of(solution_id)
        except ContractError:
            raise NotFoundError(f"unknown solution id {solution_id!r}") from None
        if entry.root is None:
            raise NotFoundError("space has no mesh files on disk")
        mesh_path = entry.root / entry.space.solutions[idx].mesh_ref
        if not mesh_path.is_file():
            raise NotFoundError(f"mesh file missing for {solution_id!r}")
        return Response(content=mesh_path.read_bytes(),
                        media_type="application/octet-stream")

    # -- sessions ------------------------------------------------------------

    @app.post("/sessions", response_model=schemas.SessionCreateResponse)
    def create_session(req: schemas.SessionCreateRequest):
        space_entry = _get_space(req.space_id)
        with registry_lock:
            counters["session"] += 1
            session_id = f"sess{counters['session']}"
        session = ExplorationSession(space_entry.space, req.space_id)
        cfg = {**default_config.to_dict(), **req.config}
        event = SessionEvent(seq=0, timestamp=0.0, type="create_session",
                             payload={"space_ref": req.space_id, "config": cfg})
        session.apply_event(event)
        entry = SessionEntry(session_id, req.space_id, session)
        entry.take_snapshot()
        sessions[session_id] = entry
        return schemas.SessionCreateResponse(session_id=session_id)

    @app.post("/sessions/{session_id}/events", response_model=schemas.EventResponse,
              responses={409: {"model": schemas.ErrorResponse},
                         422: {"model": schemas.ErrorResponse}})
    def post_event(session_id: str, req: schemas.EventRequest):
        entry = _get_session(session_id)
        event = SessionEvent(seq=req.seq, timestamp=req.ts, type=req.type,
                             payload=req.payload)
        with entry.lock:
            if entry.busy:
                raise BusyError("a re-cluster cycle is already in progress")
            expected = entry.session.version
            if event.seq != expected:
                raise ConflictError(f"stale sequence number {event.seq}; next is {expected}")
            if event.type == "trigger_recluster":
                if not entry.session.seeds:
                    raise ContractError("at least one seed required")
                entry.busy = True
                entry.snapshot = entry.snapshot.model_copy(update={"busy": True})
                worker = threading.Thread(
                    target=_run_cycle_worker, args=(entry, event), daemon=True)
                worker.start()
                return schemas.EventResponse(sequence=event.seq,
                                             state_version=entry.session.version,
                                             async_cycle=True)
            entry.session.apply_event(event)
            entry.take_snapshot()
            version = entry.session.version
        entry.publish({"type": "version", "version": version})
        return schemas.EventResponse(sequence=event.seq, state_version=version)

    def _run_cycle_worker(entry: SessionEntry, event: SessionEvent) -> None:
        last = {"frac": -1.0}

        def progress(phase: str, frac: float, info: dict) -> None:
            if frac >= 1.0 or frac - last["frac"] >= 0.05:
                last["frac"] = frac if frac < 1.0 else -1.0
                payload = {"type": "progress", "phase": phase,
                           "percent": round(100 * frac, 1)}
                payload.update(info)
                entry.publish(payload)

        try:
            entry.session.apply_event(event, progress=progress)
            entry.take_snapshot()
            entry.publish({"type": "version", "version": entry.session.version})
        except Exception as exc:  # surfaced on the stream; version not bumped
            entry.publish({"type": "error", "message": str(exc)})
        finally:
            entry.busy = False
            if entry.snapshot is not None:
                entry.snapshot = entry.snapshot.model_copy(update={"busy": False})

    @app.get("/sessions/{session_id}/state", response_model=schemas.SessionState)
    def get_state(session_id: str, version: int | None = None):
        entry = _get_session(session_id)
        return entry.snapshot

    @app.get("/sessions/{session_id}/table/{solution_id}",
             response_model=schemas.TablePayload,
             responses={404: {"model": schemas.ErrorResponse}})
    def get_table(session_id: str, solution_id: str):
        entry = _get_session(session_id)
        model = table_model(entry.session.space, entry.snapshot_survivors, solution_id)
        return schemas.TablePayload(
            solution_id=model.solution_id, spider=list(model.spider),
            radial=list(model.radial), detail_tier=model.detail_tier)

    @app.get("/sessions/{session_id}/stream")
    def stream(session_id: str):
        entry = _get_session(session_id)
        q: queue.Queue = queue.Queue()
        entry.listeners.append(q)

        def gen():
            try:
                yield "data: " + json.dumps(
                    {"type": "connected", "version": entry.session.version}) + "\n\n"
                while True:
                    try:
                        item = q.get(timeout=STREAM_POLL_SECONDS)
                    except queue.Empty:
                        yield ": keepalive\n\n"
                        continue
                    yield "data: " + json.dumps(item) + "\n\n"
            finally:
                if q in entry.listeners:
                    entry.listeners.remove(q)

        return StreamingResponse(gen(), media_type="text/event-stream")

    return app
