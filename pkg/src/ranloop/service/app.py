"""HTTP surface: run lifecycle, approvals, KPI/deviation queries, and the
resumable server-push event stream. All payloads use the canonical encoding
(fixed field order, 6-digit floats) so identical inputs serialize identically.
"""

from __future__ import annotations

import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import Response, StreamingResponse
from fastapi.staticfiles import StaticFiles

from ranloop import wire
from ranloop.datastore import KpiSelector
from ranloop.errors import (
    BackendError,
    ConflictError,
    NotFoundError,
    RanLoopError,
    StateError,
    ValidationError,
)
from ranloop.orchestrator import Intent, RunContext, RunLimits, RunSpec, Runtime, export_trace
from ranloop.orchestrator.tracefmt import parse_trace
from ranloop.service.config import ServiceConfig, Workspace, parse_window
from ranloop.simulator import scenario_from_dict
from ranloop.tsa import build_deviation_table

HTTP_STATUS = {
    ValidationError: 400,
    NotFoundError: 404,
    ConflictError: 409,
    StateError: 409,
    BackendError: 502,
}


class ServiceState:
    def __init__(self, config: ServiceConfig):
        self.config = config
        self.workspace = Workspace(config.workspace)
        self.runtime = Runtime()
        self._contexts: dict[str, RunContext] = {}
        self._lock = threading.Lock()

    def context_for(self, scenario_name: str) -> RunContext:
        """Deterministic per-scenario dataset for the query endpoints."""
        with self._lock:
            ctx = self._contexts.get(scenario_name)
            if ctx is None:
                spec = self.workspace.load_scenario(scenario_name)
                ctx = RunContext.prepare(spec)
                self._contexts[scenario_name] = ctx
            return ctx


def canonical_json(payload) -> Response:
    return Response(content=wire.dumps(payload), media_type="application/json")


def create_app(config: ServiceConfig | None = None, state: ServiceState | None = None) -> FastAPI:
    state = state or ServiceState(config or ServiceConfig.load())
    app = FastAPI(title="ranloop", docs_url=None, redoc_url=None)
    app.state.ranloop = state

    @app.exception_handler(RanLoopError)
    async def _ranloop_error(request: Request, exc: RanLoopError):
        status = 500
        for klass, code in HTTP_STATUS.items():
            if isinstance(exc, klass):
                status = code
                break
        return Response(
            content=wire.dumps({"error": exc.payload()}),
            media_type="application/json",
            status_code=status,
        )

    # -- runs -------------------------------------------------------------

    @app.post("/runs")
    async def create_run(request: Request):
        body = await request.json()
        spec = _parse_run_request(state, body)
        run_id = state.runtime.create_run(spec, background=True)
        return canonical_json({"run_id": run_id, "status": "running"})

    @app.get("/runs")
    async def list_runs():
        runs = [s.to_payload() for s in state.runtime.list_runs()]
        return canonical_json({"runs": runs})

    @app.get("/runs/{run_id}")
    async def get_run(run_id: str):
        return canonical_json(state.runtime.get_run(run_id).to_payload())

    @app.get("/runs/{run_id}/trace")
    async def get_trace(run_id: str):
        handle = state.runtime.get_handle(run_id)
        return Response(content=export_trace(handle), media_type="application/x-ndjson")

    @app.get("/runs/{run_id}/events")
    async def stream_events(run_id: str, request: Request):
        from_seq = int(request.query_params.get("from", "1"))
        handle = state.runtime.get_handle(run_id)

        def sse():
            for event in handle.events.stream(from_seq):
                data = wire.dumps(event.to_payload())
                yield f"id: {event.seq}\nevent: {event.kind}\ndata: {data}\n\n"
            yield "event: stream_end\ndata: {}\n\n"

        return StreamingResponse(sse(), media_type="text/event-stream")

    # -- approvals -----------------------------------------------------------

    @app.get("/approvals")
    async def list_approvals():
        return canonical_json(
            {"approvals": [p.to_payload() for p in state.runtime.list_approvals()]}
        )

    @app.post("/approvals/{approval_id}/decision")
    async def decide(approval_id: str, request: Request):
        body = await request.json()
        decision = body.get("decision")
        if decision not in ("approve", "reject"):
            raise ValidationError(
                f"decision must be approve or reject, got {decision!r}", field_path="decision"
            )
        ack = state.runtime.decide_approval(approval_id, decision, body.get("note", ""))
        return canonical_json(ack)

    # -- data ------------------------------------------------------------------

    @app.get("/kpi")
    async def query_kpi(request: Request):
        q = request.query_params
        scenario = _require(q, "scenario")
        ctx = state.context_for(scenario)
        window = parse_window(q.get("start"), q.get("end"), ctx.scenario.horizon_s)
        kpis = tuple(q.get("kpis").split(",")) if q.get("kpis") else tuple(ctx.scenario.kpis)
        selector = KpiSelector(
            level=q.get("level", "cell"),
            kpis=kpis,
            time_range=window,
            element_ids=tuple(q.get("elements").split(",")) if q.get("elements") else None,
            peer_scope=q.get("peer_scope"),
        )
        data = ctx.store.query_kpi(selector)
        series = [
            {
                "element_id": el,
                "kpi": kpi,
                "points": [[t, v] for t, v in pts],
            }
            for (el, kpi), pts in sorted(data.items())
        ]
        return canonical_json({"scenario": scenario, "series": series})

    @app.get("/deviations")
    async def query_deviations(request: Request):
        q = request.query_params
        scenario = _require(q, "scenario")
        ctx = state.context_for(scenario)
        window = parse_window(q.get("start"), q.get("end"), ctx.scenario.horizon_s)
        table = build_deviation_table(ctx.store, ctx.topology, window, ctx.params)
        return canonical_json({"scenario": scenario, **table.to_payload()})

    @app.get("/topology")
    async def topology(request: Request):
        scenario = _require(request.query_params, "scenario")
        ctx = state.context_for(scenario)
        return canonical_json({"scenario": scenario, **ctx.topology.to_payload()})

    @app.get("/scenarios")
    async def scenarios():
        return canonical_json({"scenarios": state.workspace.list_scenarios()})

    import os

    console_dir = Path(
        os.environ.get(
            "RANLOOP_CONSOLE_DIR",
            Path(__file__).resolve().parents[3] / "frontend" / "dist",
        )
    )
    if console_dir.exists():
        app.mount("/", StaticFiles(directory=str(console_dir), html=True), name="console")

    return app


def _require(params, key: str) -> str:
    value = params.get(key)
    if not value:
        raise ValidationError(f"missing required query parameter: {key}", field_path=key)
    return value


def _parse_run_request(state: ServiceState, body: dict) -> RunSpec:
    if not isinstance(body, dict):
        raise ValidationError("request body must be an object", field_path="$")
    mode = body.get("mode")
    if mode not in ("workflow", "agent", "agentic"):
        raise ValidationError(f"unknown mode: {mode!r}", field_path="mode")
    backend_name = body.get("backend", "rule")
    if backend_name not in ("rule", "external"):
        raise ValidationError(f"backend must be rule or external, got {backend_name!r}",
                              field_path="backend")
    if backend_name == "external" and not state.config.backend.endpoint:
        raise ValidationError("external backend requires a configured endpoint",
                              field_path="backend")

    if body.get("scenario"):
        scenario = state.workspace.load_scenario(body["scenario"])
    elif body.get("scenario_doc"):
        scenario = scenario_from_dict(body["scenario_doc"])
    else:
        raise ValidationError("request needs scenario (pre-ingested name) or scenario_doc",
                              field_path="scenario")

    intent_body = body.get("intent", {})
    window_body = intent_body.get("window", {})
    window = (
        int(window_body.get("start", 0)),
        int(window_body.get("end", scenario.horizon_s)),
    )
    intent = Intent(
        goal_kind=intent_body.get("goal_kind", "investigate_degradation"),
        window=window,
        level=intent_body.get("level", "cluster"),
        element_id=intent_body.get("element_id"),
    )
    limits_body = body.get("limits", {})
    limits = RunLimits(
        max_iterations=int(limits_body.get("max_iterations", 3)),
        max_queries=int(limits_body.get("max_queries", 8)),
    )
    return RunSpec(
        intent=intent,
        mode=mode,
        scenario=scenario,
        approval_mode=body.get("approval_mode", "interactive"),
        backend_name=backend_name,
        limits=limits,
    )
