"""HTTP API over the garden store, serving the browser workbench.

Step execution is asynchronous: POSTing a step returns 202 with a handle and
the session transitions idle -> generating -> idle (or error), observable on
the server-sent event stream at ``/api/sessions/{id}/events``.  One step may
be in flight per session; concurrent POSTs get 409.
"""

from __future__ import annotations

import json
import queue
import threading
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import StreamingResponse
from pydantic import BaseModel

from .engine import SessionConfig
from .garden import GardenSession, GardenStore, grow_step
from .gateway import GatewayConfig
from .graph import KnowledgeGraph, dumps as graph_dumps, to_graphml
from .metrics import (
    bridging_coefficient,
    degree,
    domain_prestige,
    pagerank,
)
from .reasoning import thinking_text

IDLE, GENERATING, ERROR = "idle", "generating", "error"


class CreateSessionBody(BaseModel):
    seed: str
    mode: str = "steered"
    max_steps: int = 100


class StepBody(BaseModel):
    prompt: str | None = None


@dataclass
class SessionHandle:
    session: GardenSession
    status: str = IDLE
    error: str | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)
    subscribers: list["queue.Queue[dict]"] = field(default_factory=list)

    def publish(self, event: dict) -> None:
        for q in list(self.subscribers):
            q.put(event)


class SessionRegistry:
    def __init__(self, store: GardenStore):
        self.store = store
        self.handles: dict[str, SessionHandle] = {}
        self._lock = threading.Lock()

    def create(self, session: GardenSession) -> SessionHandle:
        with self._lock:
            handle = SessionHandle(session)
            self.handles[session.session_id] = handle
            return handle

    def get(self, session_id: str) -> SessionHandle:
        with self._lock:
            handle = self.handles.get(session_id)
        if handle is None:
            try:
                session = self.store.load(session_id)
            except KeyError:
                raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
            with self._lock:
                handle = self.handles.setdefault(session_id, SessionHandle(session))
        return handle

    def ids(self) -> list[str]:
        with self._lock:
            known = set(self.handles)
        return sorted(known | set(self.store.list_sessions()))


def session_view(handle: SessionHandle) -> dict:
    session = handle.session
    top = []
    if session.integrated.nodes:
        report = degree(session.integrated)
        top = [
            {"node": session.integrated.nodes[key].display, "value": value}
            for key, value in report.top_k
        ]
    return {
        "id": session.session_id,
        "mode": session.mode,
        "seed_prompt": session.seed_prompt,
        "steps": len(session.steps),
        "max_steps": session.max_steps,
        "nodes": session.integrated.node_count(),
        "edges": session.integrated.edge_count(),
        "top_degree": top,
        "status": handle.status,
        "error": handle.error,
    }


def graph_payload(g: KnowledgeGraph, session_id: str) -> dict:
    """Graph JSON with per-node metric overlays and per-element step indices."""
    overlays: dict[str, dict[str, float]] = {}
    if g.nodes:
        overlays = {
            "degree": degree(g, k=0).values,
            "pagerank": pagerank(g).values,
            "bridging": bridging_coefficient(g, k=0).values,
            "prestige": domain_prestige(g, k=0).values,
        }
    def steps_of(provenance) -> list[int]:
        return sorted({ref.step_index for ref in provenance if ref.session_id == session_id})

    return {
        "nodes": [
            {
                "id": key,
                "display": node.display,
                "steps": steps_of(node.provenance),
                "metrics": {name: overlays[name].get(key, 0.0) for name in overlays},
            }
            for key, node in sorted(g.nodes.items())
        ],
        "edges": [
            {
                "source": edge.src,
                "target": edge.dst,
                "relation": edge.relation,
                "note": edge.note,
                "steps": steps_of(edge.provenance),
            }
            for _, edge in sorted(g.edges.items())
        ],
    }


def trace_payload(handle: SessionHandle, k: int) -> dict:
    session = handle.session
    if not 0 <= k < len(session.steps):
        raise HTTPException(status_code=404, detail=f"no step {k}")
    step = session.steps[k]
    records = []
    for record in step.session.records:
        trace = record.trace
        records.append(
            {
                "index": record.index,
                "thinking": thinking_text(trace, record.response_raw)
                if trace.thinking_present
                else None,
                "sections": trace.sections,
                "triples": [
                    {
                        "subject": t.subject,
                        "relation": t.relation,
                        "object": t.object,
                        "note": t.note,
                    }
                    for t in trace.graph_block
                ],
                "pattern": None
                if trace.pattern is None
                else {
                    "states": [
                        {"symbol": s.symbol, "binding": s.binding}
                        for s in trace.pattern.states
                    ],
                    "relations": [
                        {
                            "kind": r.kind,
                            "lhs": list(r.lhs),
                            "rhs": list(r.rhs),
                            "conditional": [
                                {"kind": a.kind, "lhs": list(a.lhs), "rhs": list(a.rhs)}
                                for a in r.conditional
                            ],
                        }
                        for r in trace.pattern.relations
                    ],
                    "context": trace.pattern.context,
                },
                "critique": record.critique,
                "final_answer": trace.final_answer,
            }
        )
    return {
        "index": step.index,
        "prompt": step.prompt,
        "prompt_source": step.prompt_source,
        "final_answer": step.session.final_answer,
        "records": records,
        "subgraph_nodes": step.subgraph.node_count(),
        "subgraph_edges": step.subgraph.edge_count(),
    }


def create_app(
    store: GardenStore,
    gateway,
    gateway_cfg: GatewayConfig | None = None,
    session_cfg: SessionConfig | None = None,
    static_dir: str | None = None,
) -> FastAPI:
    app = FastAPI(title="graphgarden", version="0.1.0")
    registry = SessionRegistry(store)
    gateway_cfg = gateway_cfg or GatewayConfig()
    session_cfg = session_cfg or SessionConfig()
    if static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=static_dir, html=True), name="ui")

    def _run_step_async(handle: SessionHandle, prompt: str | None) -> int:
        with handle.lock:
            if handle.status == GENERATING:
                raise HTTPException(status_code=409, detail="step already in progress")
            handle.status = GENERATING
            handle.error = None
        index = len(handle.session.steps)
        handle.publish({"session": handle.session.session_id, "status": GENERATING, "step": index})

        def work() -> None:
            try:
                grow_step(handle.session, prompt, gateway, session_cfg, gateway_cfg, store)
                with handle.lock:
                    handle.status = IDLE
                handle.publish(
                    {"session": handle.session.session_id, "status": IDLE, "step": index}
                )
            except Exception as exc:  # surfaced via status + event stream
                with handle.lock:
                    handle.status = ERROR
                    handle.error = str(exc)
                handle.publish(
                    {
                        "session": handle.session.session_id,
                        "status": ERROR,
                        "step": index,
                        "error": str(exc),
                    }
                )

        threading.Thread(target=work, daemon=True).start()
        return index

    @app.get("/api/sessions")
    def list_sessions() -> list[dict]:
        return [session_view(registry.get(sid)) for sid in registry.ids()]

    @app.post("/api/sessions", status_code=201)
    def create_session(body: CreateSessionBody) -> dict:
        session = GardenSession(
            seed_prompt=body.seed, mode=body.mode, max_steps=body.max_steps
        )
        handle = registry.create(session)
        _run_step_async(handle, None)  # seed step
        return session_view(handle)

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        return session_view(registry.get(session_id))

    @app.post("/api/sessions/{session_id}/step", status_code=202)
    def post_step(session_id: str, body: StepBody) -> dict:
        handle = registry.get(session_id)
        index = _run_step_async(handle, body.prompt)
        return {"session": session_id, "step": index, "status": GENERATING}

    @app.get("/api/sessions/{session_id}/graph")
    def get_graph(session_id: str, step: int | None = None) -> dict:
        handle = registry.get(session_id)
        g = handle.session.integrated
        if step is not None:
            g = g.filter_by_step(handle.session.step_ref(step))
        return graph_payload(g, session_id)

    @app.get("/api/sessions/{session_id}/steps/{k}")
    def get_step(session_id: str, k: int) -> dict:
        return trace_payload(registry.get(session_id), k)

    @app.get("/api/sessions/{session_id}/export")
    def export(session_id: str, format: str = "graphml"):
        handle = registry.get(session_id)
        if format == "graphml":
            return StreamingResponse(
                iter([to_graphml(handle.session.integrated)]),
                media_type="application/graphml+xml",
            )
        if format == "json":
            return StreamingResponse(
                iter([graph_dumps(handle.session.integrated)]),
                media_type="application/json",
            )
        raise HTTPException(status_code=422, detail=f"unknown format {format!r}")

    @app.get("/api/sessions/{session_id}/events")
    def events(session_id: str, request: Request, limit: int | None = None):
        handle = registry.get(session_id)
        q: "queue.Queue[dict]" = queue.Queue()
        handle.subscribers.append(q)
        q.put({"session": session_id, "status": handle.status, "step": max(len(handle.session.steps) - 1, 0)})

        def stream():
            sent = 0
            try:
                while limit is None or sent < limit:
                    try:
                        event = q.get(timeout=30.0)
                    except queue.Empty:
                        yield ": keepalive\n\n"
                        continue
                    yield f"event: status\ndata: {json.dumps(event)}\n\n"
                    sent += 1
            finally:
                if q in handle.subscribers:
                    handle.subscribers.remove(q)

        return StreamingResponse(stream(), media_type="text/event-stream")

    return app
